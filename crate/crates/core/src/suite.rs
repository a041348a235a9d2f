//! The verification battery behind the `suite` subcommand and the
//! acceptance integration test: one entry per criterion, each with its
//! tolerance pinned, reporting a pass/fail line and a short detail string.

use crate::averaging::{
    claim2_ratio, spherical_symmetrize, verify_shell_equality, verify_sign_preservation,
    SphericalField,
};
use crate::curvature::{
    paneitz_apply, pfaffian, q4_general, q_curvature_lcf, Calibration, CurvatureFrame,
    PfaffianVariant,
};
use crate::dim::make_dim;
use crate::error::Result;
use crate::gbc::{
    gbc_sweep, gluing_invariance, lambda_df_dlambda, levelset_identity, levelset_kappa,
    multi_end_total, sigma2_level_integral, total_q, verify_gbc_rn, EndWindow, LevelFn, Verdict,
};
use crate::kernels::{greens_solve, kernel_ii, rv_dot_limits, verify_lemma2};
use crate::profile::RadialProfile;
use crate::quad::QuadratureSpec;
use crate::radial::{analyze_end, basis_decompose, decade_radii, delta_power_jet, EndLocation};
use serde::Serialize;
use std::f64::consts::PI;

#[derive(Debug, Clone, Serialize)]
pub struct CriterionResult {
    pub id: usize,
    pub name: String,
    pub passed: bool,
    pub detail: String,
    pub seconds: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct SuiteReport {
    pub seed: u64,
    pub eps_quad: f64,
    pub r_max: f64,
    pub kappa_sigma: f64,
    pub kappa_over_cn: f64,
    pub div4_calib: f64,
    pub kappa_levelset: f64,
    pub criteria: Vec<CriterionResult>,
    pub all_passed: bool,
}

struct Check {
    passed: bool,
    detail: String,
}

fn check(passed: bool, detail: String) -> Check {
    Check { passed, detail }
}

fn c01_constants() -> Result<Check> {
    let d2 = make_dim(2)?;
    let d4 = make_dim(4)?;
    let e2 = (d2.c_n - 1.0 / (2.0 * PI)).abs() / (1.0 / (2.0 * PI));
    let e4 = (d4.c_n - 1.0 / (8.0 * PI * PI)).abs() / (1.0 / (8.0 * PI * PI));
    Ok(check(
        e2 < 1e-12 && e4 < 1e-12,
        format!("c_2 rel err {e2:.2e}, c_4 rel err {e4:.2e}"),
    ))
}

fn c02_round_sphere(spec: &QuadratureSpec) -> Result<Check> {
    let dim = make_dim(4)?;
    let total = total_q(&RadialProfile::round_sphere(), &dim, spec)?;
    Ok(check(
        (total - 2.0).abs() < 1e-3,
        format!("C_4 int Q dv = {total:.6} (expected 2)"),
    ))
}

fn c03_family(spec: &QuadratureSpec) -> Result<Check> {
    let dim = make_dim(4)?;
    let mut worst = 0.0f64;
    let mut ok = true;
    let mut detail = String::new();
    for &a in &[-1.0, -0.75, -0.5, -0.25, 0.0] {
        let p = RadialProfile::w_a(a);
        let total = total_q(&p, &dim, spec)?;
        worst = worst.max((total + a).abs());
        let rep = verify_gbc_rn(&p, &dim, spec)?;
        let equality_should = a == -1.0;
        if rep.verdict != Verdict::Satisfied
            || rep.equality_observed != equality_should
            || rep.equality_expected != equality_should
        {
            ok = false;
            detail = format!(
                "a = {a}: verdict {:?}, equality expected {} observed {}",
                rep.verdict, rep.equality_expected, rep.equality_observed
            );
        }
    }
    if ok {
        detail = format!("max |total + a| = {worst:.2e}; equality exactly at a = -1");
    }
    Ok(check(ok && worst < 1e-3, detail))
}

fn c04_sweep(seed: u64, spec: &QuadratureSpec) -> Result<Check> {
    let dim = make_dim(4)?;
    let rep = gbc_sweep(seed, 200, &dim, spec)?;
    Ok(check(
        rep.violations == 0 && rep.max_total <= 1.0 + 1e-3,
        format!(
            "200 profiles, max total {:.6}, violations {}",
            rep.max_total, rep.violations
        ),
    ))
}

fn c05_multi_end(spec: &QuadratureSpec) -> Result<Check> {
    let dim = make_dim(4)?;
    let cyl = RadialProfile::cylinder();
    let ends = vec![
        EndWindow {
            end: analyze_end(&cyl, EndLocation::Origin)?,
            inner: 0.8,
            outer: 1.6,
        },
        EndWindow {
            end: analyze_end(&cyl, EndLocation::Infinity)?,
            inner: 6.4,
            outer: 3.2,
        },
    ];
    let rep = multi_end_total(&cyl, &ends, &dim, spec)?;
    Ok(check(
        rep.total.abs() < 1e-3
            && rep.verdict == Verdict::Satisfied
            && rep.equality_observed
            && rep.equality_expected,
        format!(
            "cylinder: total {:.6} = 2 - k with k = {}, equality observed {}",
            rep.total, rep.k_ends, rep.equality_observed
        ),
    ))
}

fn c06_kernels(spec: &QuadratureSpec) -> Result<Check> {
    let d4 = make_dim(4)?;
    // 30 x 30 grid, r and s staggered to avoid the diagonal.
    let r_grid: Vec<f64> = (0..30).map(|i| 0.4 + 11.6 * i as f64 / 29.0).collect();
    let s_grid: Vec<f64> = (0..30).map(|i| 0.47 + 11.9 * i as f64 / 29.0).collect();
    let mut max_ii = 0.0f64;
    for &r in &r_grid {
        for &s in &s_grid {
            let ii = kernel_ii(r, s, &d4, spec)?;
            let expect = 1.0 / r.max(s).powi(2);
            max_ii = max_ii.max((ii - expect).abs());
        }
    }
    let mut ok = max_ii < 1e-6;
    let mut detail = format!("n=4 closed-form defect {max_ii:.2e}");

    // Structure fits for n = 2, 4, 6 on a smaller grid.
    let fit_grid: Vec<f64> = (1..=10).map(|i| 0.5 * i as f64).collect();
    for n in [2usize, 4, 6] {
        let dim = make_dim(n)?;
        let rep = verify_lemma2(&dim, &fit_grid, &fit_grid, spec)?;
        let fit_ok = if rep.degenerate {
            n == 2 && rep.c_below.is_finite() && rep.c_above.is_finite()
        } else {
            rep.residual < 1e-6
        };
        if !fit_ok {
            ok = false;
            detail = format!("lemma-2 fit failed for n = {n}: residual {:.2e}", rep.residual);
        }
    }

    // Lemma-3 suprema finite and stable under doubling r_max.
    let a = -1.0;
    let w = RadialProfile::w_a(a);
    let dim = d4;
    let f = move |s: f64| delta_power_jet(&w, &dim, 2, s, 0).map(|j| j.value()).unwrap();
    let sups = |r_max: f64| -> Result<(f64, f64)> {
        let mut sup_rv = 0.0f64;
        let mut sup_r2 = 0.0f64;
        let mut spec2 = *spec;
        spec2.r_max = r_max;
        let mut r = 0.05;
        while r <= r_max {
            let rv = crate::kernels::green_r_v_dot(&f, r, &d4, &spec2)?;
            let dv = crate::kernels::green_delta_v(&f, r, &d4, &spec2, spec.inner_tol())?;
            sup_rv = sup_rv.max(rv.abs());
            sup_r2 = sup_r2.max((r * r * dv).abs());
            r *= 1.6;
        }
        Ok((sup_rv, sup_r2))
    };
    let (s1a, s1b) = sups(spec.r_max)?;
    let (s2a, s2b) = sups(spec.r_max * 2.0)?;
    let stable = s1a.is_finite()
        && s1b.is_finite()
        && s2a <= s1a * 1.05 + 1e-6
        && s2b <= s1b * 1.05 + 1e-6;
    if !stable {
        ok = false;
        detail = format!("lemma-3 sups unstable: ({s1a:.4}, {s1b:.4}) vs ({s2a:.4}, {s2b:.4})");
    } else {
        detail.push_str(&format!(
            "; sup r|v'| = {s1a:.4}, sup r^2|Dv| = {s1b:.4}, stable under doubling"
        ));
    }
    Ok(check(ok, detail))
}

fn c07_greens(spec: &QuadratureSpec) -> Result<Check> {
    let dim = make_dim(4)?;
    let a = -1.0;
    let w = RadialProfile::w_a(a);
    let dimc = dim;
    let f = move |s: f64| delta_power_jet(&w, &dimc, 2, s, 0).map(|j| j.value()).unwrap();
    let sol = greens_solve(&f, &dim, spec)?;
    let w = RadialProfile::w_a(a);
    let mut sup = 0.0f64;
    let mut r = 0.01;
    while r <= spec.r_max {
        sup = sup.max((sol.v.value(r)? - w.value(r)?).abs());
        r *= 1.2;
    }
    let (l0, linf) = rv_dot_limits(&f, &dim, spec)?;
    let ok = sup < 10.0 * spec.eps_quad
        && l0.abs() < 1e-3
        && (linf - a).abs() < 1e-3
        && sol.residual < 1e-4;
    Ok(check(
        ok,
        format!(
            "sup|v - w_a| = {sup:.2e}, limits ({l0:.2e}, {linf:.6}), interior residual {:.2e}",
            sol.residual
        ),
    ))
}

fn c08_curvature() -> Result<Check> {
    let dim = make_dim(4)?;
    let calib = Calibration::compute(&dim)?;
    let corpus = [
        RadialProfile::w_a(-1.0),
        RadialProfile::w_a(-0.4),
        RadialProfile::round_sphere(),
        RadialProfile::w_a(0.8),
    ];
    let radii: Vec<f64> = (0..25).map(|i| 10.0 * i as f64 / 24.0).collect();
    let mut worst_q = 0.0f64;
    let mut worst_sigma = 0.0f64;
    let mut worst_pfaff = 0.0f64;
    for p in &corpus {
        for &r in &radii {
            let q_lcf = q_curvature_lcf(p, &dim, r)?;
            let q_gen = q4_general(p, &dim, r)?;
            let denom = if q_lcf.abs() > 1e-3 { q_lcf.abs() } else { 1.0 };
            worst_q = worst_q.max((q_lcf - q_gen).abs() / denom);
            let frame = CurvatureFrame::at(p, &dim, r, &calib)?;
            worst_sigma = worst_sigma.max((frame.sigma[0] - frame.j_invariant).abs());
            let s = pfaffian(&frame, &dim, PfaffianVariant::SigmaRoute)?;
            let f1 = pfaffian(&frame, &dim, PfaffianVariant::Faf1Route)?;
            let dv = pfaffian(&frame, &dim, PfaffianVariant::Div4Route)?;
            worst_pfaff = worst_pfaff.max((s - f1).abs() / (1.0 + f1.abs()));
            worst_pfaff = worst_pfaff.max((dv - f1).abs() / (1.0 + f1.abs()));
        }
    }
    // Paneitz against the conformal identity on f = exp(-r^2).
    let f = RadialProfile::from_function(&|r: f64| (-r * r).exp(), 0.0, 6.0, 4, false)?;
    let p = RadialProfile::w_a(-0.7);
    let mut worst_pan = 0.0f64;
    for i in 0..20 {
        let r = 0.1 + 2.9 * i as f64 / 19.0;
        let lhs = paneitz_apply(&f, &p, &dim, r)?;
        let fj = f.jet(r, 4)?;
        let flat2 = crate::radial::delta_jet(&crate::radial::delta_jet(&fj, &dim, r)?, &dim, r)?
            .value();
        let rhs = (-4.0 * p.value(r)?).exp() * flat2;
        worst_pan = worst_pan.max((lhs - rhs).abs() / (1.0 + rhs.abs()));
    }
    let ok = worst_q < 1e-5 && worst_sigma < 1e-9 && worst_pfaff < 1e-5 && worst_pan < 1e-5;
    Ok(check(
        ok,
        format!(
            "q4 routes {worst_q:.2e}, sigma1-J {worst_sigma:.2e}, pfaffian {worst_pfaff:.2e}, paneitz {worst_pan:.2e}; ratios kappa/C4 = {:.6}, div4 = {:.6}",
            calib.kappa_over_cn, calib.div4_calib
        ),
    ))
}

fn c09_averaging(spec: &QuadratureSpec) -> Result<Check> {
    let dim = make_dim(4)?;
    let grid = decade_radii(0.3, spec.r_max, 60);
    let bump = RadialProfile::from_function(
        &|r: f64| 0.2 * (-(r * r - 4.0) * (r * r - 4.0) / 4.0).exp(),
        0.0,
        spec.r_max + 1.0,
        4,
        false,
    )?;
    let field = SphericalField::from_cos_powers(
        &dim,
        &RadialProfile::w_a(-1.0),
        &[(2, bump.scale(0.05)?)],
        grid,
        32,
    )?;
    let defect = verify_shell_equality(&field, &dim)?;
    let sign = verify_sign_preservation(&field, &dim)?;
    let ratios = claim2_ratio(&field)?;
    let (_, tail_ratio) = *ratios.last().unwrap();
    // Zero-curvature profile decomposes to a constant.
    let const_profile = RadialProfile::constant(0.7);
    let radii = decade_radii(0.5, 5.0, 24);
    let vals: Vec<f64> = radii
        .iter()
        .map(|&r| const_profile.value(r).unwrap())
        .collect();
    let dec = basis_decompose(&radii, &vals, &dim)?;
    let max_nonconst = dec.coefficients[1..]
        .iter()
        .fold(0.0f64, |m, c| m.max(c.abs()));
    let ok = defect < 10.0 * spec.eps_quad
        && sign
        && (tail_ratio - 1.0).abs() < 1e-3
        && max_nonconst < 1e-4;
    Ok(check(
        ok,
        format!(
            "shell defect {defect:.2e}, sign preserved {sign}, tail ratio {tail_ratio:.6}, max non-constant coefficient {max_nonconst:.2e}"
        ),
    ))
}

fn c10_levelsets(spec: &QuadratureSpec) -> Result<Check> {
    let dim = make_dim(4)?;
    let p = RadialProfile::w_a(-1.0);
    let mut worst = 0.0f64;
    for f in [LevelFn::One, LevelFn::Lambda, LevelFn::LambdaPow(2.0)] {
        for &lam in &[0.3, 0.45, 0.6, 0.75, 0.9] {
            let (lhs, _rhs, defect) = levelset_identity(&p, f, lam, &dim, spec)?;
            worst = worst.max(defect / (1.0 + lhs.abs()));
        }
    }
    let kappa = levelset_kappa(&dim, spec)?;
    let mut worst_df = 0.0f64;
    for &lam in &[0.5, 0.7] {
        let df = lambda_df_dlambda(&p, lam, 0.0, &dim, spec)?;
        let s2 = sigma2_level_integral(&p, lam, 0.0, &dim, spec)?;
        worst_df = worst_df.max((df - kappa * s2).abs() / (1.0 + df.abs()));
    }
    Ok(check(
        worst < 1e-3 && worst_df < 1e-3,
        format!(
            "identity defect {worst:.2e}, derivative identity defect {worst_df:.2e}, kappa = {kappa:.4}"
        ),
    ))
}

fn c11_gluing(spec: &QuadratureSpec) -> Result<Check> {
    let dim = make_dim(4)?;
    let corpus = [
        RadialProfile::cylinder(),
        RadialProfile::w_a(-1.0),
        RadialProfile::w_a(-0.5),
        RadialProfile::round_sphere(),
    ];
    let mut worst = 0.0f64;
    for p in &corpus {
        worst = worst.max(gluing_invariance(p, (1.0, 2.0, 3.0, 4.0), &dim, spec)?);
    }
    Ok(check(
        worst < 10.0 * spec.eps_quad,
        format!("max gluing defect {worst:.2e}"),
    ))
}

/// Run the full battery. Each criterion reports one pass/fail line on
/// stdout when `verbose` is set.
pub fn run_suite(seed: u64, spec: &QuadratureSpec, verbose: bool) -> Result<SuiteReport> {
    spec.validate()?;
    let dim4 = make_dim(4)?;
    let calib = Calibration::compute(&dim4)?;
    let kappa_ls = levelset_kappa(&dim4, spec)?;
    let runs: Vec<(usize, &str, Box<dyn Fn() -> Result<Check>>)> = vec![
        (1, "normalization constants", Box::new(c01_constants)),
        (2, "round-sphere total", Box::new({ let s = *spec; move || c02_round_sphere(&s) })),
        (3, "total family and equality case", Box::new({ let s = *spec; move || c03_family(&s) })),
        (4, "randomized inequality sweep", Box::new({ let s = *spec; move || c04_sweep(seed, &s) })),
        (5, "multi-end cylinder", Box::new({ let s = *spec; move || c05_multi_end(&s) })),
        (6, "kernel structure and bounds", Box::new({ let s = *spec; move || c06_kernels(&s) })),
        (7, "green solver reproduction", Box::new({ let s = *spec; move || c07_greens(&s) })),
        (8, "curvature consistency", Box::new(c08_curvature)),
        (9, "averaging checks", Box::new({ let s = *spec; move || c09_averaging(&s) })),
        (10, "level-set identities", Box::new({ let s = *spec; move || c10_levelsets(&s) })),
        (11, "gluing invariance", Box::new({ let s = *spec; move || c11_gluing(&s) })),
    ];
    let mut criteria = Vec::with_capacity(runs.len());
    let mut all = true;
    for (id, name, run) in runs {
        let t0 = std::time::Instant::now();
        let outcome = run();
        let seconds = t0.elapsed().as_secs_f64();
        let (passed, detail) = match outcome {
            Ok(c) => (c.passed, c.detail),
            Err(e) => (false, format!("error: {e}")),
        };
        all = all && passed;
        if verbose {
            println!(
                "criterion {id:2} [{}] {name}: {detail} ({seconds:.2}s)",
                if passed { "PASS" } else { "FAIL" }
            );
        }
        criteria.push(CriterionResult {
            id,
            name: name.to_string(),
            passed,
            detail,
            seconds,
        });
    }
    Ok(SuiteReport {
        seed,
        eps_quad: spec.eps_quad,
        r_max: spec.r_max,
        kappa_sigma: calib.kappa_sigma,
        kappa_over_cn: calib.kappa_over_cn,
        div4_calib: calib.div4_calib,
        kappa_levelset: kappa_ls,
        criteria,
        all_passed: all,
    })
}

/// Extra symmetrize sanity used by the CLI: a radial field symmetrizes to
/// itself.
pub fn symmetrize_roundtrip(spec: &QuadratureSpec) -> Result<f64> {
    let dim = make_dim(4)?;
    let grid = decade_radii(0.3, spec.r_max, 40);
    let field = SphericalField::from_cos_powers(&dim, &RadialProfile::w_a(-0.5), &[], grid, 24)?;
    let bar = spherical_symmetrize(&field)?;
    let mut worst = 0.0f64;
    for &r in &[0.5, 1.0, 3.0, 8.0] {
        worst = worst.max((bar.value(r)? - RadialProfile::w_a(-0.5).value(r)?).abs());
    }
    Ok(worst)
}
