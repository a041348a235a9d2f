//! Chebyshev series on an interval [a, b]: interpolation at Lobatto points,
//! Clenshaw evaluation, spectral differentiation and least-squares fits at
//! arbitrary nodes. Backs the sampled-profile interpolants.

use crate::linalg::lstsq;
use std::f64::consts::PI;

#[derive(Debug, Clone)]
pub struct ChebSeries {
    pub a: f64,
    pub b: f64,
    pub coef: Vec<f64>,
}

/// Chebyshev-Lobatto points x_j = cos(j pi / n), mapped to [a, b], j = 0..=n.
pub fn lobatto_points(n: usize, a: f64, b: f64) -> Vec<f64> {
    (0..=n)
        .map(|j| {
            let x = (j as f64 * PI / n as f64).cos();
            0.5 * (a + b) + 0.5 * (b - a) * x
        })
        .collect()
}

impl ChebSeries {
    /// Interpolate values given at the Lobatto points returned by
    /// `lobatto_points(n, a, b)` (same ordering).
    pub fn interpolate(values: &[f64], a: f64, b: f64) -> ChebSeries {
        let n = values.len() - 1;
        let mut coef = vec![0.0; n + 1];
        for (k, c) in coef.iter_mut().enumerate() {
            let mut acc = 0.0;
            for (j, v) in values.iter().enumerate() {
                let w = if j == 0 || j == n { 0.5 } else { 1.0 };
                acc += w * v * (k as f64 * j as f64 * PI / n as f64).cos();
            }
            let w = if k == 0 || k == n { 0.5 } else { 1.0 };
            *c = acc * 2.0 * w / n as f64;
        }
        ChebSeries { a, b, coef }
    }

    /// Least-squares Chebyshev fit of degree `deg` to samples (x_i, y_i).
    pub fn fit(xs: &[f64], ys: &[f64], deg: usize, a: f64, b: f64) -> (ChebSeries, f64) {
        let m = xs.len();
        let n = deg + 1;
        let mut design = vec![0.0; m * n];
        for (i, &x) in xs.iter().enumerate() {
            let t = (2.0 * x - a - b) / (b - a);
            let mut t0 = 1.0;
            let mut t1 = t;
            for k in 0..n {
                let v = match k {
                    0 => 1.0,
                    1 => t,
                    _ => {
                        let t2 = 2.0 * t * t1 - t0;
                        t0 = t1;
                        t1 = t2;
                        t2
                    }
                };
                design[i * n + k] = v;
            }
        }
        let (coef, residual) = lstsq(&design, m, n, ys);
        (ChebSeries { a, b, coef }, residual)
    }

    pub fn eval(&self, x: f64) -> f64 {
        let t = (2.0 * x - self.a - self.b) / (self.b - self.a);
        // Clenshaw.
        let mut b1 = 0.0;
        let mut b2 = 0.0;
        for &c in self.coef.iter().skip(1).rev() {
            let tmp = 2.0 * t * b1 - b2 + c;
            b2 = b1;
            b1 = tmp;
        }
        t * b1 - b2 + self.coef[0]
    }

    /// Series of the derivative d/dx (including the interval scaling).
    /// Recurrence c'_k = c'_{k+2} + 2(k+1) c_{k+1}, with the k = 0 term halved.
    pub fn differentiate(&self) -> ChebSeries {
        let n = self.coef.len();
        let mut d = vec![0.0; n.max(2) - 1];
        if n >= 2 {
            let scale = 2.0 / (self.b - self.a);
            let mut dp = vec![0.0; n + 1];
            for k in (0..n - 1).rev() {
                dp[k] = dp[k + 2] + 2.0 * (k as f64 + 1.0) * self.coef[k + 1];
            }
            for (k, slot) in d.iter_mut().enumerate() {
                *slot = dp[k] * scale * if k == 0 { 0.5 } else { 1.0 };
            }
        }
        ChebSeries {
            a: self.a,
            b: self.b,
            coef: d,
        }
    }

    /// Derivatives (f, f', ..., f^(order)) at x by repeated spectral
    /// differentiation.
    pub fn derivs(&self, x: f64, order: usize) -> Vec<f64> {
        let mut out = Vec::with_capacity(order + 1);
        let mut cur = self.clone();
        out.push(cur.eval(x));
        for _ in 0..order {
            cur = cur.differentiate();
            out.push(cur.eval(x));
        }
        out
    }

    /// Magnitude of the trailing coefficients relative to the leading scale;
    /// a resolution indicator for adaptive panel construction.
    pub fn tail_measure(&self) -> f64 {
        let scale = self
            .coef
            .iter()
            .fold(0.0f64, |m, c| m.max(c.abs()))
            .max(1e-300);
        let k = self.coef.len();
        let tail = self.coef[k.saturating_sub(3)..]
            .iter()
            .fold(0.0f64, |m, c| m.max(c.abs()));
        tail / scale
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn interpolation_reproduces_smooth_function() {
        let a = 0.5;
        let b = 3.0;
        let f = |x: f64| (1.0 + x * x).ln();
        let pts = lobatto_points(24, a, b);
        let vals: Vec<f64> = pts.iter().map(|&x| f(x)).collect();
        let s = ChebSeries::interpolate(&vals, a, b);
        for i in 0..40 {
            let x = a + (b - a) * i as f64 / 39.0;
            assert!((s.eval(x) - f(x)).abs() < 1e-12, "x = {x}");
        }
    }

    #[test]
    fn derivative_matches_closed_form() {
        let a = 1.0;
        let b = 4.0;
        let f = |x: f64| x.ln();
        let pts = lobatto_points(30, a, b);
        let vals: Vec<f64> = pts.iter().map(|&x| f(x)).collect();
        let s = ChebSeries::interpolate(&vals, a, b);
        let d = s.derivs(2.0, 3);
        assert!((d[0] - 2.0f64.ln()).abs() < 1e-12);
        assert!((d[1] - 0.5).abs() < 1e-10);
        assert!((d[2] + 0.25).abs() < 1e-9);
        assert!((d[3] - 0.25).abs() < 1e-7);
    }

    #[test]
    fn fit_matches_interpolation_on_dense_samples() {
        let a = 0.0;
        let b = 2.0;
        let f = |x: f64| (-x).exp() * (1.0 + x);
        let xs: Vec<f64> = (0..60).map(|i| a + (b - a) * i as f64 / 59.0).collect();
        let ys: Vec<f64> = xs.iter().map(|&x| f(x)).collect();
        let (s, res) = ChebSeries::fit(&xs, &ys, 14, a, b);
        assert!(res < 1e-10, "residual {res}");
        assert!((s.eval(1.3) - f(1.3)).abs() < 1e-10);
    }
}
