#!/usr/bin/env python3
"""Smoke test for the qcurv_py extension module.

Builds expect `cargo build --release -p qcurv-py` to have produced
target/release/libqcurv_py.so; the module is staged next to this script and
imported directly.
"""

import json
import math
import pathlib
import shutil
import sys

HERE = pathlib.Path(__file__).resolve().parent
ROOT = HERE.parent


def stage_module():
    candidates = [
        ROOT / "target" / "release" / "libqcurv_py.so",
        ROOT / "target" / "debug" / "libqcurv_py.so",
        ROOT / "target" / "release" / "libqcurv_py.dylib",
    ]
    for src in candidates:
        if src.exists():
            dst = HERE / "qcurv_py.so"
            shutil.copyfile(src, dst)
            return
    sys.exit("build the extension first: cargo build --release -p qcurv-py")


def approx(a, b, tol=1e-6):
    assert abs(a - b) <= tol * (1.0 + abs(b)), f"{a} != {b} (tol {tol})"


def main():
    stage_module()
    sys.path.insert(0, str(HERE))
    import qcurv_py as q

    # Normalization constants.
    m, sphere, c4 = q.dim_constants(4)
    assert m == 2
    approx(sphere, 2.0 * math.pi**2, 1e-12)
    approx(c4, 1.0 / (8.0 * math.pi**2), 1e-12)

    # Round sphere: R = 12, Q = 6 at every radius.
    sphere_profile = q.Profile.round_sphere()
    for r in (0.0, 0.5, 2.0):
        approx(q.scalar_curvature(sphere_profile, 4, r), 12.0, 1e-8)
        approx(q.q_curvature(sphere_profile, 4, r), 6.0, 1e-7)
        approx(q.q4_general(sphere_profile, r), 6.0, 1e-7)

    # Analytic term constructor and derivative access.
    p = q.Profile([("log1p_sq", -0.5, 1.0)])
    approx(p.eval(0.0), 0.0, 1e-15)
    approx(p.eval(1.0, 1), -0.5, 1e-12)

    # Kernel closed form for n = 4.
    approx(q.kernel_ii(2.0, 1.0), 0.25, 1e-7)
    approx(q.kernel_ii(1.0, 2.0), 0.25, 1e-7)

    # Asymptotics and completeness.
    approx(q.asymptotic_exponent(q.Profile.w_a(-0.5), "infinity"), -0.5, 1e-5)
    assert q.is_complete(q.Profile.w_a(-0.5), "infinity")
    assert not q.is_complete(sphere_profile, "infinity")
    cyl = q.Profile.cylinder()
    approx(q.asymptotic_exponent(cyl, "origin"), -1.0, 1e-8)

    # Total curvature and the inequality report.
    approx(q.total_q(q.Profile.w_a(-1.0)), 1.0, 1e-3)
    report = json.loads(q.gbc_verify_json(q.Profile.w_a(-1.0)))
    assert report["verdict"] == "Satisfied"
    assert report["equality_observed"] is True

    # Frame JSON carries the eigenvalue block.
    frame = json.loads(q.curvature_frame_json(sphere_profile, 4, 1.0))
    for eig in frame["eigenvalues"]:
        approx(eig, 0.5, 1e-8)

    # Sampled profiles round-trip.
    radii = [0.0] + [0.02 * 1.1**k for k in range(75)]
    w = [-0.5 * math.log(1.0 + r * r) for r in radii]
    sampled = q.Profile.from_samples(radii, w)
    approx(sampled.eval(1.0), -0.5 * math.log(2.0), 1e-8)

    print("qcurv_py smoke test: all checks passed")


if __name__ == "__main__":
    main()
