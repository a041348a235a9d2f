//! Total curvature bookkeeping: the two-route total of the order-n
//! curvature, the inequality verifier on R^n, multi-end assemblies with
//! partition-of-unity localizations, the gluing-modification invariance
//! check, and the dimension-four level-set identities.

use crate::curvature::{curved_laplacian_jet, endo_eigenvalues, scalar_jet};
use crate::dim::Dim;
use crate::error::{QcurvError, Result};
use crate::jet::Jet;
use crate::linalg::{elementary_symmetric, symmetric_eigenvalues};
use crate::prng::Prng;
use crate::profile::{RadialProfile, Term, TermKind};
use crate::quad::{
    integrate, integrate_split, integrate_to_infinity, richardson_limit_at_infinity,
    QuadratureSpec,
};
use crate::radial::{
    asymptotic_exponent, completeness_check, delta_power_jet, equality_case_check, sign_gate,
    EndLocation, EndSpec,
};
use serde::Serialize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Verdict {
    Satisfied,
    Violated,
    HypothesesNotMet,
}

#[derive(Debug, Clone, Serialize)]
pub struct A4Flags {
    pub r_inf: f64,
    pub r_sup: f64,
    pub grad_r_sup: f64,
    pub ricci_min: f64,
    pub satisfied: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct GBCReport {
    pub n: usize,
    pub total: f64,
    pub total_flux: f64,
    pub total_quadrature: f64,
    pub bound: f64,
    pub a1_complete: bool,
    pub a2_scalar_sign: bool,
    pub a3_q_integrable: bool,
    pub a3_tail: f64,
    pub a4: Option<A4Flags>,
    pub verdict: Verdict,
    pub equality_expected: bool,
    pub equality_observed: bool,
    pub asymptotic_exponent: f64,
}

const VERDICT_TOL: f64 = 1e-3;

/// Flux route: C_n |S^{n-1}| lim r^{n-1} (Delta^{m-1} w)'(r).
fn total_q_flux(p: &RadialProfile, dim: &Dim, spec: &QuadratureSpec) -> Result<f64> {
    let mut g = |r: f64| -> Result<f64> {
        let jet = delta_power_jet(p, dim, dim.m - 1, r, 1)?;
        Ok(r.powi(dim.n as i32 - 1) * jet.deriv(1))
    };
    let (hull_lo, hull_hi) = p.hull();
    let levels = 6usize;
    let hi = if hull_hi.is_finite() { hull_hi } else { spec.r_max * 16.0 };
    let t0 = (hi / 2f64.powi(levels as i32 - 1)).max(hull_lo.max(1e-6) * 2.0);
    let (lim, _err) =
        richardson_limit_at_infinity(&mut g, t0, 2.0, spec.extrapolation_order, levels)?;
    Ok(dim.c_n * dim.sphere_volume * lim)
}

/// Quadrature route: C_n |S^{n-1}| int Delta^m w r^{n-1} dr, with the
/// absolute tail of the integrand reported for the A3 budget.
fn total_q_quadrature(
    p: &RadialProfile,
    dim: &Dim,
    spec: &QuadratureSpec,
) -> Result<(f64, f64)> {
    let tol = spec.inner_tol();
    let (hull_lo, hull_hi) = p.hull();
    let lo = if p.punctured() { hull_lo.max(1e-7) } else { 0.0 };
    let mut integrand = |r: f64| {
        delta_power_jet(p, dim, dim.m, r, 0)
            .map(|j| j.value() * r.powi(dim.n as i32 - 1))
            .unwrap_or(f64::NAN)
    };
    let inner = integrate(&mut integrand, lo, spec.r_max.min(hull_hi), tol)?;
    let (outer, mut tail) = if hull_hi.is_finite() {
        (0.0, 0.0)
    } else {
        integrate_to_infinity(&mut integrand, spec.r_max, tol.max(spec.eps_quad * 1e-3))?
    };
    if hull_hi.is_finite() && hull_hi < spec.r_max * 4.0 {
        // Sampled hull truncates the integral; report the last shell as tail.
        let mut abs_int = |r: f64| integrand(r).abs();
        tail = integrate(&mut abs_int, hull_hi * 0.5, hull_hi.min(spec.r_max), tol)?;
    }
    Ok((dim.c_n * dim.sphere_volume * (inner + outer), tail))
}

/// Total order-n curvature C_n int Q dv over R^n, computed by the radial
/// flux formula and cross-checked against direct quadrature.
pub fn total_q(p: &RadialProfile, dim: &Dim, spec: &QuadratureSpec) -> Result<f64> {
    let flux = total_q_flux(p, dim, spec)?;
    let (quad, _tail) = total_q_quadrature(p, dim, spec)?;
    if (flux - quad).abs() > 10.0 * spec.eps_quad * (1.0 + flux.abs()) {
        return Err(QcurvError::Consistency(format!(
            "flux total {flux} and quadrature total {quad} disagree beyond 10 eps_quad"
        )));
    }
    Ok(flux)
}

/// A2 near the end: the scalar-curvature sign gate must be nonpositive on
/// the outer sampling window.
fn a2_near_end(p: &RadialProfile, dim: &Dim, spec: &QuadratureSpec) -> Result<bool> {
    let (_, hull_hi) = p.hull();
    let hi = if hull_hi.is_finite() { hull_hi } else { spec.r_max * 4.0 };
    let mut r = spec.r_max.min(hi) * 0.5;
    while r <= hi {
        if sign_gate(p, dim, r)? > 1e-9 {
            return Ok(false);
        }
        r *= 1.15;
    }
    Ok(true)
}

/// Hypothesis flags for a radial metric on R^n.
#[derive(Debug, Clone, Serialize)]
pub struct HypothesisFlags {
    pub a1_complete: bool,
    pub a2_scalar_sign: bool,
    pub a3_q_integrable: bool,
    pub a3_tail: f64,
    pub a4: Option<A4Flags>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HypothesisMode {
    A123,
    A4,
}

pub fn check_hypotheses(
    p: &RadialProfile,
    dim: &Dim,
    mode: HypothesisMode,
    spec: &QuadratureSpec,
) -> Result<HypothesisFlags> {
    let a1 = completeness_check(p, EndLocation::Infinity)?.is_complete();
    let a2 = a2_near_end(p, dim, spec)?;
    let (_, tail) = total_q_quadrature(p, dim, spec)?;
    let a3 = tail <= spec.eps_quad;
    let a4 = if mode == HypothesisMode::A4 {
        let (hull_lo, hull_hi) = p.hull();
        let hi = if hull_hi.is_finite() { hull_hi } else { spec.r_max * 4.0 };
        let lo = hull_lo.max(if p.punctured() { 1e-3 } else { 0.0 });
        let mut r_inf = f64::INFINITY;
        let mut r_sup = f64::NEG_INFINITY;
        let mut grad_sup = 0.0f64;
        let mut ric_min = f64::INFINITY;
        let mut r = lo;
        loop {
            let rj = scalar_jet(p, dim, r, 1)?;
            r_inf = r_inf.min(rj.value());
            r_sup = r_sup.max(rj.value());
            let w = p.value(r)?;
            grad_sup = grad_sup.max((-w).exp() * rj.deriv(1).abs());
            let ric = crate::curvature::ricci(p, dim, r)?;
            let conf = (-2.0 * w).exp();
            let scaled: Vec<f64> = ric.iter().map(|v| v * conf).collect();
            let eig = symmetric_eigenvalues(&scaled, dim.n);
            ric_min = ric_min.min(eig[0]);
            if r >= hi {
                break;
            }
            r = (r * 1.25).max(lo + 1e-3).min(hi);
            if r == hi && r_sup == f64::NEG_INFINITY {
                break;
            }
        }
        let satisfied =
            r_inf > 1e-9 && r_sup.is_finite() && grad_sup < 1e6 && ric_min > -1e6;
        Some(A4Flags {
            r_inf,
            r_sup,
            grad_r_sup: grad_sup,
            ricci_min: ric_min,
            satisfied,
        })
    } else {
        None
    };
    Ok(HypothesisFlags {
        a1_complete: a1,
        a2_scalar_sign: a2,
        a3_q_integrable: a3,
        a3_tail: tail,
        a4,
    })
}

/// Inequality verifier on R^n. The inequality direction is checked with the
/// orientation (-1)^m relating the flat-Laplacian power to the true
/// order-n curvature, which matters for n = 2, 6.
pub fn verify_gbc_rn(p: &RadialProfile, dim: &Dim, spec: &QuadratureSpec) -> Result<GBCReport> {
    let flux = total_q_flux(p, dim, spec)?;
    let (quad, _tail) = total_q_quadrature(p, dim, spec)?;
    if (flux - quad).abs() > 10.0 * spec.eps_quad * (1.0 + flux.abs()) {
        return Err(QcurvError::Consistency(format!(
            "flux total {flux} and quadrature total {quad} disagree"
        )));
    }
    let flags = check_hypotheses(p, dim, HypothesisMode::A123, spec)?;
    let (c1, _) = asymptotic_exponent(p, EndLocation::Infinity)?;
    let total = dim.parity() * flux;
    let hypotheses = flags.a1_complete && flags.a2_scalar_sign && flags.a3_q_integrable;
    let verdict = if !hypotheses {
        Verdict::HypothesesNotMet
    } else if total <= 1.0 + VERDICT_TOL {
        Verdict::Satisfied
    } else {
        Verdict::Violated
    };
    let equality_expected = hypotheses && equality_case_check(p, dim)?;
    let equality_observed = hypotheses && (total - 1.0).abs() < VERDICT_TOL;
    Ok(GBCReport {
        n: dim.n,
        total,
        total_flux: flux,
        total_quadrature: quad,
        bound: 1.0,
        a1_complete: flags.a1_complete,
        a2_scalar_sign: flags.a2_scalar_sign,
        a3_q_integrable: flags.a3_q_integrable,
        a3_tail: flags.a3_tail,
        a4: None,
        verdict,
        equality_expected,
        equality_observed,
        asymptotic_exponent: c1,
    })
}

/// Jet of a C^4 smoothstep transition: 0 for t <= 0, 1 for t >= 1,
/// 126 t^5 - 420 t^6 + 540 t^7 - 315 t^8 + 70 t^9 in between.
fn smoothstep_jet(t: &Jet) -> Jet {
    let order = t.order();
    if t.value() <= 0.0 {
        return Jet::zero(order);
    }
    if t.value() >= 1.0 {
        return Jet::constant(1.0, order);
    }
    let coeffs = [0.0, 0.0, 0.0, 0.0, 0.0, 126.0, -420.0, 540.0, -315.0, 70.0];
    let mut acc = Jet::constant(coeffs[9], order);
    for k in (0..9).rev() {
        acc = acc.mul(t);
        acc.c[0] += coeffs[k];
    }
    acc
}

/// Jet at radius r of a window that is 1 on [b, c] and 0 outside (a, d),
/// with C^4 transitions.
fn window_jet(r: f64, a: f64, b: f64, c: f64, d: f64, order: usize) -> Jet {
    let rj = Jet::var(r, order);
    if r < b {
        let t = rj.sub(&Jet::constant(a, order)).scale(1.0 / (b - a));
        smoothstep_jet(&t)
    } else if r > c {
        let t = Jet::constant(d, order).sub(&rj).scale(1.0 / (d - c));
        smoothstep_jet(&t)
    } else {
        Jet::constant(1.0, order)
    }
}

/// Quadrature defect of int Delta^m [eta (−w_e − ln r)] over the cutoff
/// annulus. The integrand is the m-fold Laplacian of a compactly supported
/// function, so the exact value is zero.
pub fn gluing_invariance(
    w_end: &RadialProfile,
    knots: (f64, f64, f64, f64),
    dim: &Dim,
    spec: &QuadratureSpec,
) -> Result<f64> {
    let (a, b, c, d) = knots;
    if !(1.0 <= a && a < b && b <= c && c < d && d <= 4.0) {
        return Err(QcurvError::Cutoff(format!(
            "cutoff knots ({a}, {b}, {c}, {d}) not compactly supported in [1, 4]"
        )));
    }
    let order = dim.n;
    let mut integrand = |r: f64| -> f64 {
        let eta = window_jet(r, a, b, c, d, order);
        let w = match w_end.jet(r, order) {
            Ok(j) => j,
            Err(_) => return f64::NAN,
        };
        let log_jet = log_r_jet(r, order);
        let modifier = w.scale(-1.0).sub(&log_jet);
        let mut jet = eta.mul(&modifier);
        for _ in 0..dim.m {
            jet = match crate::radial::delta_jet(&jet, dim, r) {
                Ok(j) => j,
                Err(_) => return f64::NAN,
            };
        }
        jet.value() * r.powi(dim.n as i32 - 1)
    };
    let splits = [b, c];
    let value = integrate_split(&mut integrand, a, d, &splits, spec.inner_tol())?;
    Ok((dim.c_n * dim.sphere_volume * value).abs())
}

fn log_r_jet(r: f64, order: usize) -> Jet {
    let mut derivs = Vec::with_capacity(order + 1);
    derivs.push(r.ln());
    let mut fact = 1.0;
    for k in 1..=order {
        if k > 1 {
            fact *= (k - 1) as f64;
        }
        let sign = if k % 2 == 1 { 1.0 } else { -1.0 };
        derivs.push(sign * fact * r.powi(-(k as i32)));
    }
    Jet::from_derivs(&derivs)
}

/// One localized end for a multi-end assembly: the end description plus the
/// cutoff transition window of its partition-of-unity factor.
#[derive(Debug, Clone)]
pub struct EndWindow {
    pub end: EndSpec,
    /// Transition interval: the localization is 1 on the end side of
    /// `inner` and 0 past `outer` (reading outward from the end).
    pub inner: f64,
    pub outer: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct MultiEndReport {
    pub n: usize,
    pub k_ends: usize,
    pub total: f64,
    pub bound: f64,
    pub contributions: Vec<f64>,
    pub contributions_integral: Vec<f64>,
    pub hypotheses_met: bool,
    pub verdict: Verdict,
    pub equality_expected: bool,
    pub equality_observed: bool,
}

/// Total curvature of a metric with one end at infinity and k - 1 origin
/// punctures, each localized by a partition-of-unity window. Contributions
/// are the asymptotic log-coefficients, cross-checked against the localized
/// integrals.
pub fn multi_end_total(
    interior: &RadialProfile,
    ends: &[EndWindow],
    dim: &Dim,
    spec: &QuadratureSpec,
) -> Result<MultiEndReport> {
    let infinity_count = ends
        .iter()
        .filter(|e| e.end.location == EndLocation::Infinity)
        .count();
    if infinity_count != 1 {
        return Err(QcurvError::Decomposition(format!(
            "need exactly one end at infinity, got {infinity_count}"
        )));
    }
    // Disjoint supports: origin windows must close below the infinity window.
    let mut origin_hi = 0.0f64;
    let mut infinity_lo = f64::INFINITY;
    for e in ends {
        match e.end.location {
            EndLocation::Origin => {
                if !(e.inner < e.outer) {
                    return Err(QcurvError::Decomposition(
                        "origin window needs inner < outer".into(),
                    ));
                }
                origin_hi = origin_hi.max(e.outer);
            }
            EndLocation::Infinity => {
                if !(e.inner > e.outer) {
                    return Err(QcurvError::Decomposition(
                        "infinity window needs inner > outer (reading outward)".into(),
                    ));
                }
                infinity_lo = infinity_lo.min(e.outer);
            }
        }
    }
    if origin_hi > infinity_lo {
        return Err(QcurvError::Decomposition(format!(
            "localization supports overlap: origin windows reach {origin_hi}, infinity window starts at {infinity_lo}"
        )));
    }

    let order = dim.n;
    let mut contributions = Vec::new();
    let mut contributions_integral = Vec::new();
    let mut hypotheses = true;
    let mut equality_expected = true;
    for e in ends {
        let (c1, _) = asymptotic_exponent(&e.end.profile, e.end.location)?;
        let complete = completeness_check(&e.end.profile, e.end.location)?.is_complete();
        hypotheses = hypotheses && complete;
        equality_expected = equality_expected && equality_case_check(&e.end.profile, dim)?;
        match e.end.location {
            EndLocation::Origin => {
                contributions.push(c1);
                // Integral route: C_n int Delta^m (w l) over the support.
                let inner = e.inner;
                let outer = e.outer;
                let mut integrand = |r: f64| -> f64 {
                    let l = window_jet(r, 0.0, 1e-300, inner, outer, order);
                    let w = match interior.jet(r, order) {
                        Ok(j) => j,
                        Err(_) => return f64::NAN,
                    };
                    let mut jet = l.mul(&w);
                    for _ in 0..dim.m {
                        jet = match crate::radial::delta_jet(&jet, dim, r) {
                            Ok(j) => j,
                            Err(_) => return f64::NAN,
                        };
                    }
                    jet.value() * r.powi(dim.n as i32 - 1)
                };
                let lo = interior.hull().0.max(1e-7);
                let val =
                    integrate_split(&mut integrand, lo, outer, &[inner], spec.inner_tol())?;
                contributions_integral.push(dim.c_n * dim.sphere_volume * val);
            }
            EndLocation::Infinity => {
                contributions.push(-c1);
                // Integral route: flux of the localized piece at infinity
                // equals the full-space integral of Delta^m (w l).
                let inner = e.inner; // where l becomes 1 (larger radius)
                let outer = e.outer; // where l vanishes (smaller radius)
                let mut integrand = |r: f64| -> f64 {
                    let l = window_jet(r, outer, inner, f64::INFINITY, f64::INFINITY, order);
                    let w = match interior.jet(r, order) {
                        Ok(j) => j,
                        Err(_) => return f64::NAN,
                    };
                    let mut jet = l.mul(&w);
                    for _ in 0..dim.m {
                        jet = match crate::radial::delta_jet(&jet, dim, r) {
                            Ok(j) => j,
                            Err(_) => return f64::NAN,
                        };
                    }
                    jet.value() * r.powi(dim.n as i32 - 1)
                };
                let body =
                    integrate_split(&mut integrand, outer, spec.r_max, &[inner], spec.inner_tol())?;
                let (tail, _) = integrate_to_infinity(
                    &mut integrand,
                    spec.r_max,
                    spec.inner_tol().max(spec.eps_quad * 1e-3),
                )?;
                contributions_integral.push(dim.c_n * dim.sphere_volume * (body + tail));
            }
        }
        // Hypothesis directions per end.
        match e.end.location {
            EndLocation::Origin => hypotheses = hypotheses && c1 <= -1.0 + VERDICT_TOL,
            EndLocation::Infinity => hypotheses = hypotheses && c1 >= -1.0 - VERDICT_TOL,
        }
    }
    // Route consistency.
    for (lim, int) in contributions.iter().zip(&contributions_integral) {
        if (lim - int).abs() > 10.0 * spec.eps_quad * (1.0 + lim.abs()) {
            return Err(QcurvError::Consistency(format!(
                "end contribution mismatch: limit route {lim} vs integral route {int}"
            )));
        }
    }
    let k = ends.len();
    let total: f64 = contributions.iter().sum::<f64>() * dim.parity();
    let bound = 2.0 - k as f64;
    let verdict = if !hypotheses {
        Verdict::HypothesesNotMet
    } else if total <= bound + VERDICT_TOL {
        Verdict::Satisfied
    } else {
        Verdict::Violated
    };
    let equality_observed = hypotheses && (total - bound).abs() < VERDICT_TOL;
    Ok(MultiEndReport {
        n: dim.n,
        k_ends: k,
        total,
        bound,
        contributions,
        contributions_integral,
        hypotheses_met: hypotheses,
        verdict,
        equality_expected,
        equality_observed,
    })
}

/// Level functions f = F(lambda) used by the level-set identities.
#[derive(Debug, Clone, Copy, Serialize)]
pub enum LevelFn {
    One,
    Lambda,
    LambdaPow(f64),
}

impl LevelFn {
    /// Jet of f(x) = F(e^{w}) from the jet of w.
    fn jet(&self, w: &Jet) -> Jet {
        match self {
            LevelFn::One => Jet::constant(1.0, w.order()),
            LevelFn::Lambda => w.exp(),
            LevelFn::LambdaPow(p) => w.scale(*p).exp(),
        }
    }
}

/// Level radius r(lambda) for a profile with strictly decreasing e^w.
pub fn level_radius(p: &RadialProfile, lambda: f64, spec: &QuadratureSpec) -> Result<f64> {
    let (hull_lo, hull_hi) = p.hull();
    let lo = hull_lo.max(if p.punctured() { 1e-6 } else { 0.0 });
    let hi = if hull_hi.is_finite() { hull_hi } else { spec.r_max * 32.0 };
    // Monotonicity check.
    let mut r = lo.max(1e-4);
    while r < hi {
        if p.eval(r, 1)? >= 0.0 {
            return Err(QcurvError::LevelSet(format!(
                "e^w is not strictly decreasing at r = {r}"
            )));
        }
        r *= 1.7;
    }
    let target = lambda.ln();
    let w_lo = p.value(lo.max(1e-9))?;
    let w_hi = p.value(hi)?;
    if target > w_lo || target < w_hi {
        return Err(QcurvError::Domain(format!(
            "level {lambda} outside the range of e^w on [{lo}, {hi}]"
        )));
    }
    let mut a = lo.max(1e-9);
    let mut b = hi;
    for _ in 0..200 {
        let mid = 0.5 * (a + b);
        if p.value(mid)? > target {
            a = mid;
        } else {
            b = mid;
        }
        if (b - a) < 1e-14 * (1.0 + b) {
            break;
        }
    }
    Ok(0.5 * (a + b))
}

/// Both sides of the level-set differentiation identity for f = F(lambda):
/// int_{U_lambda} Delta_g f dv_g versus
/// lambda d/dlambda [ surface - volume ] with the orientation fixed on the
/// monotone radial model (outward g-unit normal of the level ball).
pub fn levelset_identity(
    p: &RadialProfile,
    f: LevelFn,
    lambda: f64,
    dim: &Dim,
    spec: &QuadratureSpec,
) -> Result<(f64, f64, f64)> {
    if dim.n != 4 {
        return Err(QcurvError::Dimension(
            "level-set identities are implemented for n = 4".into(),
        ));
    }
    let lhs = |lam: f64| -> Result<f64> {
        let rho = level_radius(p, lam, spec)?;
        let mut integrand = |r: f64| -> f64 {
            let w = match p.jet(r, 4) {
                Ok(j) => j,
                Err(_) => return f64::NAN,
            };
            let fj = f.jet(&w.truncate(2));
            let lap = match curved_laplacian_jet(&fj, &w.truncate(2), dim, r) {
                Ok(j) => j.value(),
                Err(_) => return f64::NAN,
            };
            lap * (4.0 * w.value()).exp() * r.powi(3)
        };
        let lo = p.hull().0.max(if p.punctured() { 1e-6 } else { 0.0 });
        Ok(dim.sphere_volume * integrate(&mut integrand, lo, rho, spec.inner_tol())?)
    };
    let bracket = |lam: f64| -> Result<f64> {
        let rho = level_radius(p, lam, spec)?;
        let w_rho = p.jet(rho, 1)?;
        let f_val = f.jet(&w_rho.truncate(0)).value();
        // Surface term: (e^{-w} w') f on the g-sphere of area e^{3w} rho^3 |S^3|.
        let surface = (-w_rho.value()).exp()
            * w_rho.deriv(1)
            * f_val
            * (3.0 * w_rho.value()).exp()
            * rho.powi(3)
            * dim.sphere_volume;
        let mut integrand = |r: f64| -> f64 {
            let w = match p.jet(r, 3) {
                Ok(j) => j,
                Err(_) => return f64::NAN,
            };
            let lap_g_w = match curved_laplacian_jet(&w.truncate(2), &w.truncate(2), dim, r) {
                Ok(j) => j.value(),
                Err(_) => return f64::NAN,
            };
            let fv = f.jet(&w.truncate(0)).value();
            lap_g_w * fv * (4.0 * w.value()).exp() * r.powi(3)
        };
        let lo = p.hull().0.max(if p.punctured() { 1e-6 } else { 0.0 });
        let volume =
            dim.sphere_volume * integrate(&mut integrand, lo, rho, spec.inner_tol())?;
        Ok(surface - volume)
    };
    let lhs_val = lhs(lambda)?;
    let h = 1e-3 * lambda;
    let rhs = lambda * (bracket(lambda + h)? - bracket(lambda - h)?) / (2.0 * h);
    Ok((lhs_val, rhs, (lhs_val - rhs).abs()))
}

/// The level-set functional F(lambda) built from flat volume elements, on
/// the (possibly truncated) region {delta <= r <= r(lambda)}.
#[derive(Debug, Clone, Serialize)]
pub struct LevelSetFrame {
    pub lambda: f64,
    pub r_of_lambda: f64,
    pub truncation: f64,
    pub volume_part: f64,
    pub surface_part: f64,
    pub f_value: f64,
}

pub fn f_lambda(
    p: &RadialProfile,
    lambda: f64,
    truncation: f64,
    dim: &Dim,
    spec: &QuadratureSpec,
) -> Result<LevelSetFrame> {
    if dim.n != 4 {
        return Err(QcurvError::Dimension(
            "level-set functional is implemented for n = 4".into(),
        ));
    }
    let rho = level_radius(p, lambda, spec)?;
    if truncation >= rho {
        return Err(QcurvError::LevelSet(format!(
            "truncation {truncation} not below the level radius {rho}"
        )));
    }
    let mut integrand = |r: f64| -> f64 {
        let w = match p.jet(r, 2) {
            Ok(j) => j,
            Err(_) => return f64::NAN,
        };
        let rj = match scalar_jet(p, dim, r, 0) {
            Ok(j) => j.value(),
            Err(_) => return f64::NAN,
        };
        let j_inv = rj / 6.0;
        let wp = w.deriv(1);
        let grad2 = wp * wp;
        (3.0 * j_inv * (2.0 * w.value()).exp() + grad2) * grad2 * r.powi(3)
    };
    let lo = truncation.max(p.hull().0);
    let volume = dim.sphere_volume * integrate(&mut integrand, lo, rho, spec.inner_tol())?;
    let w_rho = p.jet(rho, 1)?;
    let wp = w_rho.deriv(1);
    let surface = dim.sphere_volume * rho.powi(3) * wp * wp * wp;
    Ok(LevelSetFrame {
        lambda,
        r_of_lambda: rho,
        truncation,
        volume_part: volume,
        surface_part: surface,
        f_value: volume + surface,
    })
}

/// lambda dF/dlambda by central differences.
pub fn lambda_df_dlambda(
    p: &RadialProfile,
    lambda: f64,
    truncation: f64,
    dim: &Dim,
    spec: &QuadratureSpec,
) -> Result<f64> {
    let h = 1e-3 * lambda;
    let fp = f_lambda(p, lambda + h, truncation, dim, spec)?.f_value;
    let fm = f_lambda(p, lambda - h, truncation, dim, spec)?.f_value;
    Ok(lambda * (fp - fm) / (2.0 * h))
}

/// int_{U_lambda} sigma_2 dv_g over the (possibly truncated) level region.
pub fn sigma2_level_integral(
    p: &RadialProfile,
    lambda: f64,
    truncation: f64,
    dim: &Dim,
    spec: &QuadratureSpec,
) -> Result<f64> {
    let rho = level_radius(p, lambda, spec)?;
    let mut integrand = |r: f64| -> f64 {
        let eig = match endo_eigenvalues(p, dim, r) {
            Ok(e) => e,
            Err(_) => return f64::NAN,
        };
        let sig2 = elementary_symmetric(&eig)[1];
        let w = p.value(r).unwrap_or(f64::NAN);
        sig2 * (4.0 * w).exp() * r.powi(3)
    };
    let lo = truncation.max(p.hull().0);
    Ok(dim.sphere_volume * integrate(&mut integrand, lo, rho, spec.inner_tol())?)
}

/// Proportionality constant of the derivative identity
/// lambda dF/dlambda = kappa int_{U_lambda} sigma_2 dv_g, measured on the
/// a = -1 profile at a reference level. The magnitude is the sigma-route
/// calibration ratio; the sign records the resolved orientation of the
/// level-set normal on the monotone radial model.
pub fn levelset_kappa(dim: &Dim, spec: &QuadratureSpec) -> Result<f64> {
    let p = RadialProfile::w_a(-1.0);
    let lambda = 0.6;
    let df = lambda_df_dlambda(&p, lambda, 0.0, dim, spec)?;
    let s2 = sigma2_level_integral(&p, lambda, 0.0, dim, spec)?;
    Ok(df / s2)
}

/// Random admissible analytic profile: 1..=3 log-type terms with bounded
/// coefficients, rejection-sampled for completeness and the scalar-sign
/// gate near the end.
pub fn random_complete_profile(
    rng: &mut Prng,
    dim: &Dim,
    spec: &QuadratureSpec,
) -> Result<RadialProfile> {
    for _ in 0..400 {
        let count = rng.int_range(1, 3);
        let mut terms = Vec::with_capacity(count);
        for _ in 0..count {
            terms.push(Term {
                coeff: rng.range(-1.5, 1.5),
                kind: TermKind::Log1pSq {
                    rho: rng.range(0.5, 2.0),
                },
            });
        }
        let p = RadialProfile::analytic(terms, false)?;
        let (c1, _) = asymptotic_exponent(&p, EndLocation::Infinity)?;
        if c1 < -1.0 + 1e-4 {
            continue;
        }
        if !a2_near_end(&p, dim, spec)? {
            continue;
        }
        return Ok(p);
    }
    Err(QcurvError::Precondition(
        "rejection sampling failed to produce an admissible profile".into(),
    ))
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepReport {
    pub seed: u64,
    pub count: usize,
    pub max_total: f64,
    pub violations: usize,
    pub equality_hits: usize,
}

/// Worker cap from QCURV_THREADS (default 1).
pub fn worker_threads() -> usize {
    std::env::var("QCURV_THREADS")
        .ok()
        .and_then(|v| v.parse().ok())
        .filter(|&t| t >= 1)
        .unwrap_or(1)
}

/// Randomized inequality sweep: seeded admissible profiles must all satisfy
/// the bound. Profile generation is sequential (the seed fixes the corpus);
/// totals are evaluated on up to QCURV_THREADS workers.
pub fn gbc_sweep(
    seed: u64,
    count: usize,
    dim: &Dim,
    spec: &QuadratureSpec,
) -> Result<SweepReport> {
    let mut rng = Prng::new(seed);
    let mut profiles = Vec::with_capacity(count);
    for _ in 0..count {
        profiles.push(random_complete_profile(&mut rng, dim, spec)?);
    }
    let threads = worker_threads().min(count.max(1));
    let totals: Vec<Result<f64>> = if threads <= 1 {
        profiles
            .iter()
            .map(|p| Ok(dim.parity() * total_q_flux(p, dim, spec)?))
            .collect()
    } else {
        let mut totals: Vec<Result<f64>> = (0..count).map(|_| Ok(0.0)).collect();
        let chunk = count.div_ceil(threads);
        std::thread::scope(|scope| {
            for (slot, work) in totals.chunks_mut(chunk).zip(profiles.chunks(chunk)) {
                scope.spawn(move || {
                    for (out, p) in slot.iter_mut().zip(work) {
                        *out = total_q_flux(p, dim, spec).map(|t| dim.parity() * t);
                    }
                });
            }
        });
        totals
    };
    let mut max_total = f64::NEG_INFINITY;
    let mut violations = 0usize;
    let mut equality_hits = 0usize;
    for t in totals {
        let total = t?;
        max_total = max_total.max(total);
        if total > 1.0 + VERDICT_TOL {
            violations += 1;
        }
        if (total - 1.0).abs() < VERDICT_TOL {
            equality_hits += 1;
        }
    }
    Ok(SweepReport {
        seed,
        count,
        max_total,
        violations,
        equality_hits,
    })
}

/// One-time calibration of the dimension-four divergence identity: the
/// constant kappa_div with kappa_div int_D e^{4w} sigma_2 dv equal to the
/// boundary flux of (Delta w + |grad w|^2 - Hess w)(grad w, n^) over a ball.
pub fn divergence_identity_check(
    p: &RadialProfile,
    radius: f64,
    kappa_div: f64,
    dim: &Dim,
    spec: &QuadratureSpec,
) -> Result<(f64, f64)> {
    let mut integrand = |r: f64| -> f64 {
        let eig = match endo_eigenvalues(p, dim, r) {
            Ok(e) => e,
            Err(_) => return f64::NAN,
        };
        let sig2 = elementary_symmetric(&eig)[1];
        let w = p.value(r).unwrap_or(f64::NAN);
        sig2 * (4.0 * w).exp() * r.powi(3)
    };
    let lo = p.hull().0.max(if p.punctured() { 1e-6 } else { 0.0 });
    let volume = dim.sphere_volume * integrate(&mut integrand, lo, radius, spec.inner_tol())?;
    // Boundary flux: radial component of (Delta w + |grad w|^2 - Hess w)(grad w, .)
    // on the sphere of the given radius.
    let w = p.jet(radius, 2)?;
    let wp = w.deriv(1);
    let wpp = w.deriv(2);
    let lap = crate::radial::delta_jet(&w, dim, radius)?.value();
    let flux_density = (lap + wp * wp) * wp - wpp * wp;
    let flux = dim.sphere_volume * radius.powi(3) * flux_density;
    Ok((kappa_div * volume, flux))
}

/// Measure kappa_div on the round sphere.
pub fn divergence_kappa(dim: &Dim, spec: &QuadratureSpec) -> Result<f64> {
    let p = RadialProfile::round_sphere();
    let (vol, flux) = divergence_identity_check(&p, 1.3, 1.0, dim, spec)?;
    Ok(flux / vol)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dim::make_dim;

    fn d4() -> Dim {
        make_dim(4).unwrap()
    }

    fn spec() -> QuadratureSpec {
        QuadratureSpec::default()
    }

    #[test]
    fn total_q_flat_and_family() {
        let dim = d4();
        let sp = spec();
        assert!(total_q(&RadialProfile::zero(), &dim, &sp).unwrap().abs() < 1e-12);
        for &a in &[-1.0, -0.75, -0.5, -0.25] {
            let t = total_q(&RadialProfile::w_a(a), &dim, &sp).unwrap();
            assert!((t - (-a)).abs() < 1e-3, "a = {a}: total {t}");
        }
        // Round sphere: total 2 = Euler(S^4).
        let t = total_q(&RadialProfile::round_sphere(), &dim, &sp).unwrap();
        assert!((t - 2.0).abs() < 1e-3, "total {t}");
    }

    #[test]
    fn verify_gbc_examples() {
        let dim = d4();
        let sp = spec();
        // a = -1: equality case.
        let rep = verify_gbc_rn(&RadialProfile::w_a(-1.0), &dim, &sp).unwrap();
        assert_eq!(rep.verdict, Verdict::Satisfied);
        assert!((rep.total - 1.0).abs() < 1e-3);
        assert!(rep.equality_expected && rep.equality_observed);
        // a = -1/2: strict inequality.
        let rep = verify_gbc_rn(&RadialProfile::w_a(-0.5), &dim, &sp).unwrap();
        assert_eq!(rep.verdict, Verdict::Satisfied);
        assert!((rep.total - 0.5).abs() < 1e-3);
        assert!(!rep.equality_expected && !rep.equality_observed);
        // Round sphere: incomplete, hypotheses not met.
        let rep = verify_gbc_rn(&RadialProfile::round_sphere(), &dim, &sp).unwrap();
        assert_eq!(rep.verdict, Verdict::HypothesesNotMet);
        assert!(!rep.a1_complete);
    }

    #[test]
    fn hypothesis_flags() {
        let dim = d4();
        let sp = spec();
        let flags =
            check_hypotheses(&RadialProfile::w_a(-1.0), &dim, HypothesisMode::A4, &sp).unwrap();
        assert!(flags.a1_complete && flags.a2_scalar_sign && flags.a3_q_integrable);
        let a4 = flags.a4.unwrap();
        assert!(a4.satisfied);
        assert!((a4.r_inf - 6.0).abs() < 0.1, "inf R = {}", a4.r_inf);
        // Flat metric: R = 0 fails the pinching.
        let flags =
            check_hypotheses(&RadialProfile::zero(), &dim, HypothesisMode::A4, &sp).unwrap();
        assert!(!flags.a4.unwrap().satisfied);
        // Round sphere: A4 holds pointwise but A1 fails.
        let flags = check_hypotheses(
            &RadialProfile::round_sphere(),
            &dim,
            HypothesisMode::A4,
            &sp,
        )
        .unwrap();
        assert!(!flags.a1_complete);
        assert!(flags.a4.unwrap().satisfied);
    }

    #[test]
    fn gluing_defect_vanishes() {
        let dim = d4();
        let sp = spec();
        // Cylinder end: the modifier is identically zero.
        let defect =
            gluing_invariance(&RadialProfile::cylinder(), (1.0, 2.0, 3.0, 4.0), &dim, &sp)
                .unwrap();
        assert!(defect < 1e-12, "cylinder defect {defect}");
        // w_{-1} tail: nonzero modifier, zero total by compact support.
        let defect =
            gluing_invariance(&RadialProfile::w_a(-1.0), (1.0, 2.0, 3.0, 4.0), &dim, &sp)
                .unwrap();
        assert!(defect < 10.0 * sp.eps_quad, "defect {defect}");
        // Invalid cutoff.
        assert!(matches!(
            gluing_invariance(&RadialProfile::w_a(-1.0), (0.5, 2.0, 3.0, 4.0), &dim, &sp),
            Err(QcurvError::Cutoff(_))
        ));
    }

    #[test]
    fn multi_end_cylinder() {
        let dim = d4();
        let sp = spec();
        let cyl = RadialProfile::cylinder();
        let ends = vec![
            EndWindow {
                end: crate::radial::analyze_end(&cyl, EndLocation::Origin).unwrap(),
                inner: 0.8,
                outer: 1.6,
            },
            EndWindow {
                end: crate::radial::analyze_end(&cyl, EndLocation::Infinity).unwrap(),
                inner: 6.4,
                outer: 3.2,
            },
        ];
        let rep = multi_end_total(&cyl, &ends, &dim, &sp).unwrap();
        assert_eq!(rep.k_ends, 2);
        assert!((rep.total - 0.0).abs() < 1e-3, "total {}", rep.total);
        assert!((rep.bound - 0.0).abs() < 1e-12);
        assert_eq!(rep.verdict, Verdict::Satisfied);
        assert!(rep.equality_observed && rep.equality_expected);
    }

    #[test]
    fn multi_end_mixed_exponents() {
        let dim = d4();
        let sp = spec();
        // Interior: w = -2 ln r + (1/2) ln(1 + r^2): c1 = -2 at the origin
        // puncture, a = -1 at infinity.
        let interior = RadialProfile::analytic(
            vec![
                Term {
                    coeff: -2.0,
                    kind: TermKind::Log,
                },
                Term {
                    coeff: 0.5,
                    kind: TermKind::Log1pSq { rho: 1.0 },
                },
            ],
            true,
        )
        .unwrap();
        let ends = vec![
            EndWindow {
                end: crate::radial::analyze_end(&interior, EndLocation::Origin).unwrap(),
                inner: 0.5,
                outer: 1.0,
            },
            EndWindow {
                end: crate::radial::analyze_end(&interior, EndLocation::Infinity).unwrap(),
                inner: 8.0,
                outer: 4.0,
            },
        ];
        let rep = multi_end_total(&interior, &ends, &dim, &sp).unwrap();
        // total = 1 + (-2) = -1 <= 0 = 2 - k.
        assert!((rep.total - (-1.0)).abs() < 2e-3, "total {}", rep.total);
        assert_eq!(rep.verdict, Verdict::Satisfied);
        assert!(!rep.equality_observed);
    }

    #[test]
    fn overlapping_windows_rejected() {
        let dim = d4();
        let sp = spec();
        let cyl = RadialProfile::cylinder();
        let ends = vec![
            EndWindow {
                end: crate::radial::analyze_end(&cyl, EndLocation::Origin).unwrap(),
                inner: 2.0,
                outer: 5.0,
            },
            EndWindow {
                end: crate::radial::analyze_end(&cyl, EndLocation::Infinity).unwrap(),
                inner: 6.0,
                outer: 3.0,
            },
        ];
        assert!(matches!(
            multi_end_total(&cyl, &ends, &dim, &sp),
            Err(QcurvError::Decomposition(_))
        ));
    }

    #[test]
    fn levelset_identity_examples() {
        let dim = d4();
        let sp = spec();
        let p = RadialProfile::w_a(-1.0);
        // f = 1: both sides vanish (divergence theorem).
        let (lhs, rhs, defect) = levelset_identity(&p, LevelFn::One, 0.5, &dim, &sp).unwrap();
        assert!(lhs.abs() < 1e-8, "lhs {lhs}");
        assert!(rhs.abs() < 1e-6, "rhs {rhs}");
        assert!(defect < 1e-6);
        // f = lambda and lambda^2.
        for (f, lam) in [(LevelFn::Lambda, 0.5), (LevelFn::LambdaPow(2.0), 0.7)] {
            let (lhs, rhs, defect) = levelset_identity(&p, f, lam, &dim, &sp).unwrap();
            assert!(
                defect < 1e-3 * (1.0 + lhs.abs()),
                "f {f:?} at {lam}: lhs {lhs} rhs {rhs} defect {defect}"
            );
        }
        // Flat metric has degenerate level sets.
        assert!(matches!(
            levelset_identity(&RadialProfile::zero(), LevelFn::One, 0.5, &dim, &sp),
            Err(QcurvError::LevelSet(_))
        ));
    }

    #[test]
    fn level_radius_strictly_decreasing_in_lambda() {
        let sp = spec();
        let p = RadialProfile::w_a(-1.0);
        let mut prev = f64::INFINITY;
        for &lam in &[0.2, 0.4, 0.6, 0.8, 0.95] {
            let r = level_radius(&p, lam, &sp).unwrap();
            assert!(r < prev, "r({lam}) = {r} not below {prev}");
            assert!((p.value(r).unwrap().exp() - lam).abs() < 1e-10);
            prev = r;
        }
    }

    #[test]
    fn levelset_kappa_value() {
        // Expected: the sigma-route ratio (4) with the orientation sign of
        // the monotone radial model.
        let dim = d4();
        let sp = spec();
        let kappa = levelset_kappa(&dim, &sp).unwrap();
        assert!((kappa + 4.0).abs() < 2e-3, "kappa {kappa}");
    }

    #[test]
    fn levelset_derivative_identity_on_w_minus_one() {
        let dim = d4();
        let sp = spec();
        let p = RadialProfile::w_a(-1.0);
        let kappa = levelset_kappa(&dim, &sp).unwrap();
        for &lam in &[0.5, 0.7] {
            let df = lambda_df_dlambda(&p, lam, 0.0, &dim, &sp).unwrap();
            let s2 = sigma2_level_integral(&p, lam, 0.0, &dim, &sp).unwrap();
            let rel = (df - kappa * s2).abs() / (1.0 + df.abs());
            assert!(rel < 1e-3, "lambda {lam}: dF {df} vs kappa s2 {}", kappa * s2);
        }
    }

    #[test]
    fn levelset_cylinder_truncated() {
        // sigma_2 = 0: lambda dF/dlambda is constant across interior levels
        // (checked in incremental form on the truncated annulus).
        let dim = d4();
        let sp = spec();
        let p = RadialProfile::cylinder();
        let delta = 0.05;
        let d1 = lambda_df_dlambda(&p, 0.5, delta, &dim, &sp).unwrap();
        let d2 = lambda_df_dlambda(&p, 0.8, delta, &dim, &sp).unwrap();
        let d3 = lambda_df_dlambda(&p, 1.2, delta, &dim, &sp).unwrap();
        assert!((d1 - d2).abs() < 1e-6 * (1.0 + d1.abs()), "{d1} vs {d2}");
        assert!((d2 - d3).abs() < 1e-6 * (1.0 + d2.abs()), "{d2} vs {d3}");
        // The constant equals -4 |S^3| on the unit cylinder.
        assert!(
            (d1 + 4.0 * dim.sphere_volume).abs() < 1e-4 * dim.sphere_volume,
            "constant {d1}"
        );
    }

    #[test]
    fn sweep_is_clean_and_deterministic() {
        let dim = d4();
        let sp = spec();
        let rep = gbc_sweep(12345, 20, &dim, &sp).unwrap();
        assert_eq!(rep.violations, 0);
        assert!(rep.max_total <= 1.0 + 1e-3, "max {}", rep.max_total);
        let rep2 = gbc_sweep(12345, 20, &dim, &sp).unwrap();
        assert_eq!(rep.max_total, rep2.max_total);
    }

    #[test]
    fn divergence_form_identity() {
        let dim = d4();
        let sp = spec();
        let kappa = divergence_kappa(&dim, &sp).unwrap();
        for p in [RadialProfile::w_a(-1.0), RadialProfile::w_a(-0.4)] {
            for &rho in &[0.8, 1.5, 3.0] {
                let (lhs, rhs) = divergence_identity_check(&p, rho, kappa, &dim, &sp).unwrap();
                assert!(
                    (lhs - rhs).abs() < 1e-3 * (1.0 + rhs.abs()),
                    "rho {rho}: {lhs} vs {rhs}"
                );
            }
        }
    }
}
