//! Truncated Taylor series ("jets") used as the derivative currency of the
//! toolkit. A `Jet` stores Taylor coefficients c[k] = f^(k)(r0)/k! about a
//! base point; arithmetic is plain truncated power-series arithmetic.

#[derive(Debug, Clone, PartialEq)]
pub struct Jet {
    /// Taylor coefficients about the expansion point, c[0] = value.
    pub c: Vec<f64>,
}

impl Jet {
    pub fn zero(order: usize) -> Self {
        Jet {
            c: vec![0.0; order + 1],
        }
    }

    pub fn constant(v: f64, order: usize) -> Self {
        let mut c = vec![0.0; order + 1];
        c[0] = v;
        Jet { c }
    }

    /// Series of the coordinate itself: r0 + h.
    pub fn var(r0: f64, order: usize) -> Self {
        let mut c = vec![0.0; order + 1];
        c[0] = r0;
        if order >= 1 {
            c[1] = 1.0;
        }
        Jet { c }
    }

    pub fn order(&self) -> usize {
        self.c.len() - 1
    }

    pub fn value(&self) -> f64 {
        self.c[0]
    }

    /// k-th derivative at the expansion point.
    pub fn deriv(&self, k: usize) -> f64 {
        if k >= self.c.len() {
            return 0.0;
        }
        let mut fact = 1.0;
        for j in 1..=k {
            fact *= j as f64;
        }
        self.c[k] * fact
    }

    pub fn from_derivs(derivs: &[f64]) -> Self {
        let mut c = Vec::with_capacity(derivs.len());
        let mut fact = 1.0;
        for (k, d) in derivs.iter().enumerate() {
            if k > 0 {
                fact *= k as f64;
            }
            c.push(d / fact);
        }
        Jet { c }
    }

    pub fn truncate(&self, order: usize) -> Jet {
        let mut c = self.c.clone();
        c.truncate(order + 1);
        Jet { c }
    }

    /// Series of f': coefficients shift down, order drops by one.
    pub fn differentiate(&self) -> Jet {
        if self.c.len() == 1 {
            return Jet { c: vec![0.0] };
        }
        let c = (1..self.c.len())
            .map(|k| self.c[k] * k as f64)
            .collect();
        Jet { c }
    }

    pub fn add(&self, rhs: &Jet) -> Jet {
        let len = self.c.len().min(rhs.c.len());
        let c = (0..len).map(|k| self.c[k] + rhs.c[k]).collect();
        Jet { c }
    }

    pub fn sub(&self, rhs: &Jet) -> Jet {
        let len = self.c.len().min(rhs.c.len());
        let c = (0..len).map(|k| self.c[k] - rhs.c[k]).collect();
        Jet { c }
    }

    pub fn scale(&self, s: f64) -> Jet {
        Jet {
            c: self.c.iter().map(|v| v * s).collect(),
        }
    }

    pub fn mul(&self, rhs: &Jet) -> Jet {
        let len = self.c.len().min(rhs.c.len());
        let mut c = vec![0.0; len];
        for i in 0..len {
            for j in 0..len - i {
                c[i + j] += self.c[i] * rhs.c[j];
            }
        }
        Jet { c }
    }

    /// Reciprocal series; requires a nonzero constant term.
    pub fn recip(&self) -> Jet {
        let len = self.c.len();
        let a0 = self.c[0];
        assert!(a0 != 0.0, "reciprocal of series with zero constant term");
        let mut c = vec![0.0; len];
        c[0] = 1.0 / a0;
        for k in 1..len {
            let mut acc = 0.0;
            for j in 1..=k {
                acc += self.c[j] * c[k - j];
            }
            c[k] = -acc / a0;
        }
        Jet { c }
    }

    pub fn div(&self, rhs: &Jet) -> Jet {
        self.mul(&rhs.recip())
    }

    /// exp of the series, standard recurrence p_k = (1/k) sum j a_j p_{k-j}.
    pub fn exp(&self) -> Jet {
        let len = self.c.len();
        let mut c = vec![0.0; len];
        c[0] = self.c[0].exp();
        for k in 1..len {
            let mut acc = 0.0;
            for j in 1..=k {
                acc += j as f64 * self.c[j] * c[k - j];
            }
            c[k] = acc / k as f64;
        }
        Jet { c }
    }

    /// Composition self(g) where g has zero constant term.
    pub fn compose(&self, inner: &Jet) -> Jet {
        assert!(
            inner.c[0] == 0.0,
            "composition requires inner series with zero constant term"
        );
        let order = self.order().min(inner.order());
        // Horner on series: result = c_n; result = result*g + c_k.
        let mut result = Jet::constant(*self.c.last().unwrap(), order);
        for k in (0..self.c.len() - 1).rev() {
            result = result.mul(inner);
            result.c[0] += self.c[k];
        }
        result
    }

    /// Divide by the monomial h^p (drops the lowest p coefficients, which the
    /// caller asserts are negligible). Used for removable singularities.
    pub fn shift_down(&self, p: usize) -> Jet {
        let c = self.c[p..].to_vec();
        Jet { c }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn assert_close(a: f64, b: f64, tol: f64, msg: &str) {
        assert!((a - b).abs() <= tol * (1.0 + b.abs()), "{msg}: {a} vs {b}");
    }

    #[test]
    fn exp_matches_closed_form() {
        // f(r) = exp(2r) at r0 = 0.3: derivatives 2^k e^{0.6}.
        let x = Jet::var(0.3, 6).scale(2.0);
        let e = x.exp();
        for k in 0..=6 {
            let expect = 2.0f64.powi(k as i32) * (0.6f64).exp();
            assert_close(e.deriv(k), expect, 1e-13, "exp deriv");
        }
    }

    #[test]
    fn recip_and_mul_are_inverse() {
        let f = Jet {
            c: vec![2.0, -1.0, 0.5, 0.25, -0.125],
        };
        let one = f.mul(&f.recip());
        assert_close(one.c[0], 1.0, 1e-14, "recip c0");
        for k in 1..=4 {
            assert!(one.c[k].abs() < 1e-13);
        }
    }

    #[test]
    fn compose_square() {
        // W(u) = u^2 + 3u composed with u = 2 r0 h + h^2 (r0 = 1.5) gives the
        // jet of (r^2 - r0^2)^2 + 3(r^2 - r0^2) in h = r - r0.
        let order = 5;
        let r0: f64 = 1.5;
        let outer = Jet {
            c: vec![0.0, 3.0, 1.0, 0.0, 0.0, 0.0],
        };
        let mut inner = Jet::zero(order);
        inner.c[1] = 2.0 * r0;
        inner.c[2] = 1.0;
        let got = outer.compose(&inner);
        // Direct expansion of f(r) = (r^2-r0^2)^2 + 3(r^2-r0^2).
        let f = |r: f64| (r * r - r0 * r0).powi(2) + 3.0 * (r * r - r0 * r0);
        let h = 1e-3;
        let fd1 = (f(r0 + h) - f(r0 - h)) / (2.0 * h);
        assert_close(got.deriv(0), f(r0), 1e-14, "value");
        assert_close(got.deriv(1), fd1, 1e-6, "first derivative");
        // Exact: f'(r) = 2(r^2-r0^2) 2r + 6r -> f'(r0) = 6 r0.
        assert_close(got.deriv(1), 6.0 * r0, 1e-13, "first derivative exact");
    }
}
