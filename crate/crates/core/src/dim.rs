use crate::error::{QcurvError, Result};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// Dimension bookkeeping for even n: half-dimension, unit-sphere volume and
/// the Gauss-Bonnet normalization constant 1/(((n-2)!!)^2 |S^{n-1}|).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Dim {
    pub n: usize,
    pub m: usize,
    pub sphere_volume: f64,
    pub c_n: f64,
}

fn double_factorial(k: usize) -> f64 {
    let mut acc = 1.0;
    let mut j = k;
    while j > 1 {
        acc *= j as f64;
        j -= 2;
    }
    acc
}

/// |S^{n-1}| = 2 pi^{n/2} / Gamma(n/2); for even n, Gamma(n/2) = (n/2 - 1)!.
fn unit_sphere_area(n: usize) -> f64 {
    let m = n / 2;
    let mut gamma_m = 1.0;
    for j in 1..m {
        gamma_m *= j as f64;
    }
    2.0 * PI.powi(m as i32) / gamma_m
}

pub fn make_dim(n: usize) -> Result<Dim> {
    if n % 2 != 0 || n < 2 || n > 8 {
        return Err(QcurvError::Dimension(format!(
            "n must be even with 2 <= n <= 8, got {n}"
        )));
    }
    let sphere_volume = unit_sphere_area(n);
    let df = double_factorial(n - 2);
    Ok(Dim {
        n,
        m: n / 2,
        sphere_volume,
        c_n: 1.0 / (df * df * sphere_volume),
    })
}

impl Dim {
    /// Parity of the half-dimension: (-1)^m. The flat-Laplacian power
    /// representation of the order-n curvature flips sign with it.
    pub fn parity(&self) -> f64 {
        if self.m % 2 == 0 {
            1.0
        } else {
            -1.0
        }
    }
}
