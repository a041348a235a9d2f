//! One-dimensional quadrature and limit extrapolation: Gauss-Legendre rules,
//! adaptive panel integration with explicit split points, semi-infinite
//! integrals with reported tail bounds, and Richardson extrapolation of
//! r -> 0 / r -> infinity limits along geometric radius sequences.

use crate::error::{QcurvError, Result};
use serde::{Deserialize, Serialize};

/// Quadrature configuration shared by the modules.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct QuadratureSpec {
    pub radial_nodes: usize,
    pub angular_nodes: usize,
    pub r_max: f64,
    pub split_log_singularity: bool,
    pub eps_quad: f64,
    pub extrapolation_order: usize,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        QuadratureSpec {
            radial_nodes: 64,
            angular_nodes: 48,
            r_max: 40.0,
            split_log_singularity: true,
            eps_quad: 1e-5,
            extrapolation_order: 4,
        }
    }
}

impl QuadratureSpec {
    pub fn validate(&self) -> Result<()> {
        if self.radial_nodes < 4 || self.angular_nodes < 4 {
            return Err(QcurvError::Quadrature(
                "node counts must be at least 4".into(),
            ));
        }
        if !(self.eps_quad > 0.0) {
            return Err(QcurvError::Quadrature("eps_quad must be positive".into()));
        }
        if !(self.r_max > 1.0) {
            return Err(QcurvError::Quadrature("r_max must exceed 1".into()));
        }
        Ok(())
    }

    /// Interior tolerance used for the quadrature engine; kept well below the
    /// reported budget eps_quad so that composed quantities stay inside it.
    pub fn inner_tol(&self) -> f64 {
        (self.eps_quad * 1e-4).max(1e-13)
    }
}

/// Gauss-Legendre nodes and weights on [-1, 1], by Newton iteration on the
/// Legendre recurrence.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1);
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let m = (n + 1) / 2;
    for i in 0..m {
        // Chebyshev-based initial guess.
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut pp = 0.0;
        for _ in 0..100 {
            // Legendre P_n(x) and derivative via the three-term recurrence.
            let mut p0 = 1.0;
            let mut p1 = x;
            for k in 2..=n {
                let kf = k as f64;
                let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
                p0 = p1;
                p1 = p2;
            }
            pp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / pp;
            x -= dx;
            if dx.abs() < 1e-15 {
                break;
            }
        }
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        let w = 2.0 / ((1.0 - x * x) * pp * pp);
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    if n == 1 {
        nodes[0] = 0.0;
        weights[0] = 2.0;
    }
    (nodes, weights)
}

fn gl_apply(f: &mut dyn FnMut(f64) -> f64, a: f64, b: f64, xs: &[f64], ws: &[f64]) -> f64 {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let mut acc = 0.0;
    for (x, w) in xs.iter().zip(ws) {
        acc += w * f(c + h * x);
    }
    acc * h
}

fn cached_rules() -> &'static ((Vec<f64>, Vec<f64>), (Vec<f64>, Vec<f64>)) {
    use std::sync::OnceLock;
    static RULES: OnceLock<((Vec<f64>, Vec<f64>), (Vec<f64>, Vec<f64>))> = OnceLock::new();
    RULES.get_or_init(|| (gauss_legendre(15), gauss_legendre(31)))
}

/// Adaptive Gauss-Legendre on [a, b]: error estimated by comparing a 15-point
/// and a 31-point rule per panel, bisecting until the local budget is met.
pub fn integrate(f: &mut dyn FnMut(f64) -> f64, a: f64, b: f64, tol: f64) -> Result<f64> {
    if a == b {
        return Ok(0.0);
    }
    let ((x15, w15), (x31, w31)) = cached_rules();
    let mut total = 0.0;
    // Work stack of (a, b, depth).
    let mut stack = vec![(a, b, 0usize)];
    let full = (b - a).abs();
    while let Some((lo, hi, depth)) = stack.pop() {
        let coarse = gl_apply(f, lo, hi, x15, w15);
        let fine = gl_apply(f, lo, hi, x31, w31);
        let err = (fine - coarse).abs();
        let budget = tol * ((hi - lo).abs() / full).max(1e-3);
        if err <= budget || depth >= 48 {
            if depth >= 48 && err > budget * 100.0 {
                return Err(QcurvError::Quadrature(format!(
                    "panel [{lo}, {hi}] error {err:e} above budget {budget:e}"
                )));
            }
            total += fine;
        } else {
            let mid = 0.5 * (lo + hi);
            stack.push((lo, mid, depth + 1));
            stack.push((mid, hi, depth + 1));
        }
    }
    Ok(total)
}

/// Adaptive integration with interior split points (singularity isolation).
pub fn integrate_split(
    f: &mut dyn FnMut(f64) -> f64,
    a: f64,
    b: f64,
    splits: &[f64],
    tol: f64,
) -> Result<f64> {
    let mut pts = vec![a];
    for &s in splits {
        if s > a && s < b {
            pts.push(s);
        }
    }
    pts.push(b);
    pts.sort_by(|x, y| x.partial_cmp(y).unwrap());
    let mut acc = 0.0;
    for w in pts.windows(2) {
        acc += integrate(f, w[0], w[1], tol)?;
    }
    Ok(acc)
}

/// Integral over [a, infinity) of a decaying integrand: geometric panels
/// [a, 2a], [2a, 4a], ... accumulated until a panel falls below the budget,
/// plus a geometric-ratio tail estimate which is returned alongside.
pub fn integrate_to_infinity(
    f: &mut dyn FnMut(f64) -> f64,
    a: f64,
    tol: f64,
) -> Result<(f64, f64)> {
    let a = if a <= 0.0 { 1e-8 } else { a };
    let mut lo = a;
    let mut acc = 0.0;
    let mut prev_panel = f64::INFINITY;
    let mut panel = 0.0;
    for k in 0..80 {
        let hi = lo * 2.0;
        panel = integrate(f, lo, hi, tol * 0.25)?;
        acc += panel;
        if panel.abs() < tol && k > 2 {
            // Tail estimate from the observed panel decay ratio.
            let ratio = (panel.abs() / prev_panel.abs()).min(0.9);
            let tail = panel.abs() * ratio / (1.0 - ratio);
            return Ok((acc, tail));
        }
        prev_panel = panel;
        lo = hi;
    }
    Err(QcurvError::Integrability(format!(
        "integrand tail not below {tol:e} after 80 doublings (last panel {panel:e})"
    )))
}

/// Richardson extrapolation of lim g(t) as t -> infinity, sampling along the
/// geometric sequence t_j = t0 * ratio^j and eliminating corrections in
/// successive powers of 1/t^step_power.
pub fn richardson_limit_at_infinity(
    g: &mut dyn FnMut(f64) -> Result<f64>,
    t0: f64,
    ratio: f64,
    order: usize,
    levels: usize,
) -> Result<(f64, f64)> {
    assert!(ratio > 1.0);
    let levels = levels.max(order + 2);
    let mut rows: Vec<Vec<f64>> = Vec::with_capacity(levels);
    let mut t = t0;
    for _ in 0..levels {
        let mut row = vec![g(t)?];
        let r = rows.last();
        if let Some(prev) = r {
            // Neville-style elimination: correction term t^{-2k} at level k.
            for k in 1..=prev.len().min(order) {
                let q = ratio.powi(2 * k as i32);
                let v = (q * row[k - 1] - prev[k - 1]) / (q - 1.0);
                row.push(v);
            }
        }
        rows.push(row);
        t *= ratio;
    }
    let last = rows.last().unwrap();
    let best = *last.last().unwrap();
    let prev_best = if last.len() >= 2 {
        last[last.len() - 2]
    } else {
        rows[rows.len() - 2][0]
    };
    let err = (best - prev_best).abs();
    if !best.is_finite() {
        return Err(QcurvError::Limit("extrapolated value not finite".into()));
    }
    Ok((best, err))
}

/// Same, for t -> 0+ along t_j = t0 / ratio^j with corrections in t^{2k}.
pub fn richardson_limit_at_zero(
    g: &mut dyn FnMut(f64) -> Result<f64>,
    t0: f64,
    ratio: f64,
    order: usize,
    levels: usize,
) -> Result<(f64, f64)> {
    let mut wrapped = |t: f64| g(1.0 / t);
    richardson_limit_at_infinity(&mut wrapped, 1.0 / t0, ratio, order, levels)
}
