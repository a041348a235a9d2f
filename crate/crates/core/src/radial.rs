//! Flat radial calculus: powers of the radial Laplacian u'' + (n-1)u'/r,
//! the n-dimensional polyharmonic kernel basis, least-squares decomposition
//! onto it, asymptotic exponent extraction and completeness / equality-case
//! classification of ends.

use crate::dim::Dim;
use crate::error::{QcurvError, Result};
use crate::jet::Jet;
use crate::linalg::lstsq;
use crate::profile::{RadialProfile, Term, TermKind};
use crate::quad::{self, integrate};

/// Which end of a radial metric is under consideration.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EndLocation {
    Origin,
    Infinity,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Completeness {
    Complete,
    Incomplete,
    /// |c1 + 1| was inside tolerance; resolved by direct divergence testing
    /// of the length integral toward the end.
    BorderlineResolved { complete: bool },
}

impl Completeness {
    pub fn is_complete(&self) -> bool {
        matches!(
            self,
            Completeness::Complete | Completeness::BorderlineResolved { complete: true }
        )
    }
}

/// One end of the manifold: its location, the profile valid near it, the
/// asymptotic log-coefficient and the completeness verdict.
#[derive(Debug, Clone)]
pub struct EndSpec {
    pub location: EndLocation,
    pub profile: RadialProfile,
    pub c1: f64,
    pub completeness: Completeness,
}

/// Apply the radial flat Laplacian at jet level. The input jet (order q)
/// must be centered at r; the output has order q - 2. At r = 0 the
/// removable singularity u'/r is handled by the even-jet structure.
pub fn delta_jet(u: &Jet, dim: &Dim, r: f64) -> Result<Jet> {
    if u.order() < 2 {
        return Err(QcurvError::Order(
            "radial Laplacian needs two derivative orders".into(),
        ));
    }
    let du = u.differentiate();
    let ddu = du.differentiate();
    let nm1 = (dim.n - 1) as f64;
    if r == 0.0 {
        // u'(0) must vanish; u'/r is the shifted series.
        if du.c[0].abs() > 1e-8 * (1.0 + u.c[0].abs()) {
            return Err(QcurvError::Domain(format!(
                "radial Laplacian at r = 0 requires w'(0) = 0, got {:e}",
                du.c[0]
            )));
        }
        let mut shifted = du.clone();
        shifted.c[0] = 0.0;
        let ratio = shifted.shift_down(1);
        Ok(ddu.add(&ratio.scale(nm1).truncate(ddu.order())))
    } else {
        let rr = Jet::var(r, du.order());
        let ratio = du.div(&rr);
        Ok(ddu.add(&ratio.scale(nm1).truncate(ddu.order())))
    }
}

/// Jet of Delta^k u at r with `extra` spare derivative orders.
pub fn delta_power_jet(
    p: &RadialProfile,
    dim: &Dim,
    k: usize,
    r: f64,
    extra: usize,
) -> Result<Jet> {
    let order = 2 * k + extra;
    let mut jet = p.jet(r, order)?;
    for _ in 0..k {
        jet = delta_jet(&jet, dim, r)?;
    }
    Ok(jet)
}

/// k-fold radial flat Laplacian of the profile at r.
pub fn radial_delta_power(p: &RadialProfile, dim: &Dim, k: usize, r: f64) -> Result<f64> {
    if k > dim.m {
        return Err(QcurvError::Order(format!(
            "Laplacian power {k} exceeds m = {} for n = {}",
            dim.m, dim.n
        )));
    }
    Ok(delta_power_jet(p, dim, k, r, 0)?.value())
}

/// The n-element kernel basis of the m-fold radial Laplacian on the
/// punctured space: {1, ln r, r^2, ..., r^(n-2), r^-2, ..., r^(2-n)}.
pub fn polyharmonic_basis(dim: &Dim) -> Vec<RadialProfile> {
    let mut basis = vec![
        RadialProfile::constant(1.0),
        RadialProfile::analytic(
            vec![Term {
                coeff: 1.0,
                kind: TermKind::Log,
            }],
            true,
        )
        .unwrap(),
    ];
    let mut p = 2i32;
    while p <= dim.n as i32 - 2 {
        basis.push(
            RadialProfile::analytic(
                vec![Term {
                    coeff: 1.0,
                    kind: TermKind::Power { p: p as f64 },
                }],
                false,
            )
            .unwrap(),
        );
        p += 2;
    }
    let mut p = -2i32;
    while p >= 2 - dim.n as i32 {
        basis.push(
            RadialProfile::analytic(
                vec![Term {
                    coeff: 1.0,
                    kind: TermKind::Power { p: p as f64 },
                }],
                true,
            )
            .unwrap(),
        );
        p -= 2;
    }
    basis
}

/// Coefficients of a radial function over the polyharmonic basis, in the
/// basis order returned by `polyharmonic_basis`.
#[derive(Debug, Clone)]
pub struct BasisDecomposition {
    pub coefficients: Vec<f64>,
    pub residual: f64,
    pub relative_residual: f64,
}

/// Least-squares fit of samples (r_i, u_i) onto the polyharmonic basis.
/// Columns are scaled to unit norm; the fit must leave a relative residual
/// below 1e-6 or the input is declared not polyharmonic.
pub fn basis_decompose(r: &[f64], u: &[f64], dim: &Dim) -> Result<BasisDecomposition> {
    if r.len() != u.len() || r.len() < 2 * dim.n {
        return Err(QcurvError::Domain(format!(
            "need at least {} samples, got {}",
            2 * dim.n,
            r.len()
        )));
    }
    if r[r.len() - 1] / r[0] < 10.0 {
        return Err(QcurvError::Domain(
            "sample radii must span at least one decade".into(),
        ));
    }
    let basis = polyharmonic_basis(dim);
    let m = r.len();
    let nb = basis.len();
    let mut design = vec![0.0; m * nb];
    let mut col_scale = vec![0.0; nb];
    for (j, b) in basis.iter().enumerate() {
        let mut norm = 0.0;
        for (i, &ri) in r.iter().enumerate() {
            let v = b.value(ri)?;
            design[i * nb + j] = v;
            norm += v * v;
        }
        col_scale[j] = norm.sqrt().max(1e-300);
        for i in 0..m {
            design[i * nb + j] /= col_scale[j];
        }
    }
    let (mut coef, residual) = lstsq(&design, m, nb, u);
    for (c, s) in coef.iter_mut().zip(&col_scale) {
        *c /= s;
    }
    let u_norm = u.iter().map(|v| v * v).sum::<f64>().sqrt().max(1e-300);
    let relative = residual / u_norm;
    if relative > 1e-6 {
        return Err(QcurvError::NotPolyharmonic {
            residual: relative,
            threshold: 1e-6,
        });
    }
    Ok(BasisDecomposition {
        coefficients: coef,
        residual,
        relative_residual: relative,
    })
}

/// Log-spaced radii recommended for basis decomposition.
pub fn decade_radii(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    let count = count.max(4);
    let ratio = (hi / lo).powf(1.0 / (count - 1) as f64);
    let mut out = Vec::with_capacity(count);
    let mut r = lo;
    for _ in 0..count {
        out.push(r);
        r *= ratio;
    }
    out
}

/// Richardson-extrapolated limit of r w'(r) toward the given end, with an
/// error estimate from the last extrapolation increment.
pub fn asymptotic_exponent(
    p: &RadialProfile,
    end: EndLocation,
) -> Result<(f64, f64)> {
    let (hull_lo, hull_hi) = p.hull();
    let mut g = |r: f64| -> Result<f64> { Ok(r * p.eval(r, 1)?) };
    match end {
        EndLocation::Infinity => {
            let hi = if hull_hi.is_finite() { hull_hi } else { 2048.0 };
            let levels = 7usize;
            let t0 = hi / 2f64.powi(levels as i32 - 1);
            quad::richardson_limit_at_infinity(&mut g, t0.max(4.0 * hull_lo.max(1e-6)), 2.0, 4, levels)
        }
        EndLocation::Origin => {
            let lo = if hull_lo > 0.0 { hull_lo } else { 1e-9 };
            let levels = 7usize;
            let t0 = (lo * 2f64.powi(levels as i32 - 1)).min(0.25);
            quad::richardson_limit_at_zero(&mut g, t0.max(lo * 1.5), 2.0, 4, levels)
        }
    }
}

const BORDERLINE_TOL: f64 = 1e-3;
const DIVERGENCE_THRESHOLD: f64 = 1e3;

/// Direct divergence test of int e^w dr toward the end: geometric shells are
/// accumulated until the partial sum passes the divergence threshold or the
/// shell integrals decay geometrically.
fn length_integral_diverges(p: &RadialProfile, end: EndLocation) -> Result<bool> {
    let (hull_lo, hull_hi) = p.hull();
    let mut total = 0.0;
    let mut prev_shell = f64::INFINITY;
    let mut decaying = 0usize;
    match end {
        EndLocation::Infinity => {
            let mut lo = 1.0f64.max(hull_lo * 2.0);
            let hi_cap = if hull_hi.is_finite() { hull_hi } else { 1e9 };
            while lo < hi_cap {
                let hi = (lo * 2.0).min(hi_cap);
                let mut f = |r: f64| p.value(r).unwrap_or(f64::NEG_INFINITY).exp();
                let shell = integrate(&mut f, lo, hi, 1e-8)?;
                total += shell;
                if total > DIVERGENCE_THRESHOLD {
                    return Ok(true);
                }
                if shell < prev_shell * 0.95 {
                    decaying += 1;
                    if decaying >= 4 && shell < 1e-9 * total.max(1.0) {
                        return Ok(false);
                    }
                } else {
                    decaying = 0;
                }
                prev_shell = shell;
                lo = hi;
            }
            // Hull exhausted: judge by the trailing shell trend.
            Ok(decaying < 4)
        }
        EndLocation::Origin => {
            let mut hi = 0.5f64.min(if hull_hi.is_finite() { hull_hi / 2.0 } else { 0.5 });
            let lo_cap = hull_lo.max(1e-12);
            while hi > lo_cap {
                let lo = (hi / 2.0).max(lo_cap);
                let mut f = |r: f64| p.value(r).unwrap_or(f64::NEG_INFINITY).exp();
                let shell = integrate(&mut f, lo, hi, 1e-8)?;
                total += shell;
                if total > DIVERGENCE_THRESHOLD {
                    return Ok(true);
                }
                if shell < prev_shell * 0.95 {
                    decaying += 1;
                    if decaying >= 4 && shell < 1e-9 * total.max(1.0) {
                        return Ok(false);
                    }
                } else {
                    decaying = 0;
                }
                prev_shell = shell;
                hi = lo;
            }
            Ok(decaying < 4)
        }
    }
}

/// Classify the end by the asymptotic exponent; exactly at the borderline
/// the length integral decides.
pub fn completeness_check(p: &RadialProfile, end: EndLocation) -> Result<Completeness> {
    let (c1, _err) = asymptotic_exponent(p, end)?;
    let distance = c1 + 1.0;
    let borderline = distance.abs() < BORDERLINE_TOL;
    if borderline {
        let complete = length_integral_diverges(p, end)?;
        return Ok(Completeness::BorderlineResolved { complete });
    }
    let complete = match end {
        EndLocation::Infinity => c1 > -1.0,
        EndLocation::Origin => c1 < -1.0,
    };
    Ok(if complete {
        Completeness::Complete
    } else {
        Completeness::Incomplete
    })
}

/// Equality-case detector: sup_r r e^{w(r)} finite over the extrapolation
/// sequence toward each end of the profile's domain.
pub fn equality_case_check(p: &RadialProfile, _dim: &Dim) -> Result<bool> {
    let (hull_lo, hull_hi) = p.hull();
    let rho = |r: f64| -> Result<f64> { Ok(r * p.value(r)?.exp()) };
    // Outward sequence.
    let hi = if hull_hi.is_finite() { hull_hi } else { 1e6 };
    let mut r = 1.0f64.max(hull_lo * 2.0).min(hi / 64.0);
    let mut seq = Vec::new();
    while r <= hi {
        seq.push(rho(r)?);
        r *= 2.0;
    }
    let k = seq.len();
    if k >= 2 && seq[k - 1] > seq[k - 2] * (1.0 + BORDERLINE_TOL) {
        return Ok(false);
    }
    // Inward sequence for punctured profiles.
    if p.punctured() {
        let lo = hull_lo.max(1e-7);
        let mut r = 0.5f64.min(hi / 2.0);
        let mut inward = Vec::new();
        while r >= lo {
            inward.push(rho(r)?);
            r /= 2.0;
        }
        let k = inward.len();
        if k >= 2 && inward[k - 1] > inward[k - 2] * (1.0 + BORDERLINE_TOL) {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Build the end report for one end of a profile.
pub fn analyze_end(p: &RadialProfile, location: EndLocation) -> Result<EndSpec> {
    let (c1, _) = asymptotic_exponent(p, location)?;
    let completeness = completeness_check(p, location)?;
    Ok(EndSpec {
        location,
        profile: p.clone(),
        c1,
        completeness,
    })
}

/// Scalar-curvature sign gate: Delta w + (m-1) |grad w|^2 at r. The scalar
/// curvature of e^{2w} g_0 is nonnegative exactly where this is <= 0.
pub fn sign_gate(p: &RadialProfile, dim: &Dim, r: f64) -> Result<f64> {
    let jet = p.jet(r, 2)?;
    let lap = delta_jet(&jet, dim, r)?.value();
    let grad = jet.deriv(1);
    Ok(lap + (dim.m as f64 - 1.0) * grad * grad)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dim::make_dim;

    #[test]
    fn delta_power_rules() {
        let d4 = make_dim(4).unwrap();
        // Delta r^2 = 2n = 8.
        let r2 = RadialProfile::analytic(
            vec![Term {
                coeff: 1.0,
                kind: TermKind::Power { p: 2.0 },
            }],
            false,
        )
        .unwrap();
        let v = radial_delta_power(&r2, &d4, 1, 1.3).unwrap();
        assert!((v - 8.0).abs() < 1e-12);
        // Delta^2 r^4 = 192 in n = 4.
        let r4 = RadialProfile::analytic(
            vec![Term {
                coeff: 1.0,
                kind: TermKind::Power { p: 4.0 },
            }],
            false,
        )
        .unwrap();
        let v = radial_delta_power(&r4, &d4, 2, 0.7).unwrap();
        assert!((v - 192.0).abs() < 1e-10, "got {v}");
        // Delta ln r = (n-2)/r^2 = 1/2 at r = 2.
        let lnr = RadialProfile::analytic(
            vec![Term {
                coeff: 1.0,
                kind: TermKind::Log,
            }],
            true,
        )
        .unwrap();
        let v = radial_delta_power(&lnr, &d4, 1, 2.0).unwrap();
        assert!((v - 0.5).abs() < 1e-13);
    }

    #[test]
    fn delta_at_origin_uses_limit() {
        // Delta u (0) = n u''(0) for smooth radial u.
        let d4 = make_dim(4).unwrap();
        let p = RadialProfile::w_a(-1.0); // w'' (0) = -1
        let v = radial_delta_power(&p, &d4, 1, 0.0).unwrap();
        assert!((v + 4.0).abs() < 1e-12, "got {v}");
    }

    #[test]
    fn order_precondition() {
        let d4 = make_dim(4).unwrap();
        let p = RadialProfile::w_a(1.0);
        assert!(radial_delta_power(&p, &d4, 3, 1.0).is_err());
    }

    #[test]
    fn basis_is_polyharmonic() {
        for n in [2usize, 4, 6, 8] {
            let dim = make_dim(n).unwrap();
            let basis = polyharmonic_basis(&dim);
            assert_eq!(basis.len(), n);
            for (i, b) in basis.iter().enumerate() {
                for &r in &[0.5, 1.0, 2.2, 5.0] {
                    let v = delta_power_jet(b, &dim, dim.m, r, 0).unwrap().value();
                    assert!(
                        v.abs() < 1e-9 * (1.0 + r.powi(n as i32)),
                        "n = {n} basis {i} at r = {r}: {v}"
                    );
                }
            }
        }
    }

    #[test]
    fn decompose_recovers_constructed_input() {
        let d4 = make_dim(4).unwrap();
        let radii = decade_radii(0.5, 5.0, 24);
        // u = 3 + 2 ln r.
        let u: Vec<f64> = radii.iter().map(|&r| 3.0 + 2.0 * r.ln()).collect();
        let dec = basis_decompose(&radii, &u, &d4).unwrap();
        assert!((dec.coefficients[0] - 3.0).abs() < 1e-9);
        assert!((dec.coefficients[1] - 2.0).abs() < 1e-9);
        for c in &dec.coefficients[2..] {
            assert!(c.abs() < 1e-9);
        }
        // u = r^-2 - r^2: coefficients on the growth and decay columns.
        let u: Vec<f64> = radii.iter().map(|&r| r.powi(-2) - r * r).collect();
        let dec = basis_decompose(&radii, &u, &d4).unwrap();
        assert!((dec.coefficients[2] + 1.0).abs() < 1e-9);
        assert!((dec.coefficients[3] - 1.0).abs() < 1e-9);
    }

    #[test]
    fn decompose_rejects_non_polyharmonic() {
        let d4 = make_dim(4).unwrap();
        let radii = decade_radii(0.5, 5.0, 24);
        let u: Vec<f64> = radii.iter().map(|&r| r.powi(3)).collect();
        assert!(matches!(
            basis_decompose(&radii, &u, &d4),
            Err(QcurvError::NotPolyharmonic { .. })
        ));
    }

    #[test]
    fn exponents_and_completeness() {
        // w_a family: exponent a at infinity.
        for &a in &[-1.5, -1.0, -0.5, 0.0, 0.7] {
            let p = RadialProfile::w_a(a);
            let (c1, err) = asymptotic_exponent(&p, EndLocation::Infinity).unwrap();
            assert!((c1 - a).abs() < 1e-6, "a = {a}: c1 = {c1}, err = {err}");
        }
        // Smooth at origin: exponent 0.
        let p = RadialProfile::w_a(-0.8);
        let (c0, _) = asymptotic_exponent(&p, EndLocation::Origin).unwrap();
        assert!(c0.abs() < 1e-9);
        // Cylinder: exponent -1 at the puncture, exact.
        let cyl = RadialProfile::cylinder();
        let (c1, _) = asymptotic_exponent(&cyl, EndLocation::Origin).unwrap();
        assert!((c1 + 1.0).abs() < 1e-9);

        // Completeness classification.
        let flat = RadialProfile::zero();
        assert_eq!(
            completeness_check(&flat, EndLocation::Infinity).unwrap(),
            Completeness::Complete
        );
        let borderline = RadialProfile::w_a(-1.0);
        match completeness_check(&borderline, EndLocation::Infinity).unwrap() {
            Completeness::BorderlineResolved { complete } => assert!(complete),
            other => panic!("expected borderline, got {other:?}"),
        }
        let sphere = RadialProfile::round_sphere();
        assert_eq!(
            completeness_check(&sphere, EndLocation::Infinity).unwrap(),
            Completeness::Incomplete
        );
    }

    #[test]
    fn equality_cases() {
        let d4 = make_dim(4).unwrap();
        assert!(equality_case_check(&RadialProfile::w_a(-1.0), &d4).unwrap());
        assert!(!equality_case_check(&RadialProfile::zero(), &d4).unwrap());
        assert!(equality_case_check(&RadialProfile::cylinder(), &d4).unwrap());
    }

    #[test]
    fn sign_gate_matches_examples() {
        let d4 = make_dim(4).unwrap();
        // Flat: gate is 0.
        assert_eq!(sign_gate(&RadialProfile::zero(), &d4, 1.0).unwrap(), 0.0);
        // w_{-1}: gate negative everywhere (R > 0).
        for &r in &[0.0, 0.5, 1.0, 4.0, 20.0] {
            let g = sign_gate(&RadialProfile::w_a(-1.0), &d4, r).unwrap();
            assert!(g < 0.0, "r = {r}: {g}");
        }
        // Cylinder: (2-n)/(2 r^2) = -1/(r^2) at n = 4... gate = -1/r^2.
        let g = sign_gate(&RadialProfile::cylinder(), &d4, 2.0).unwrap();
        assert!((g + 0.25).abs() < 1e-12, "got {g}");
    }
}
