//! Spherical symmetrization of axisymmetric conformal factors. Fields live
//! on an (r, theta) grid with the sin^{n-2} polar weight; angular structure
//! is carried spectrally as Gegenbauer modes so that m-fold Laplacians stay
//! stable at the poles.

use crate::dim::Dim;
use crate::error::{QcurvError, Result};
use crate::jet::Jet;
use crate::profile::RadialProfile;
use crate::quad::gauss_legendre;
use crate::radial::delta_jet;
use serde::Serialize;
use std::f64::consts::PI;

/// Value of the axisymmetric angular eigenfunction of degree k at cos(theta)
/// = x: Gegenbauer C_k^{(n-2)/2}(x) for n >= 4, cos(k theta) for n = 2.
/// Eigenvalue of the sphere Laplacian: -k (k + n - 2).
fn angular_eigenfunction(dim: &Dim, k: usize, theta: f64) -> f64 {
    if dim.n == 2 {
        return (k as f64 * theta).cos();
    }
    let alpha = (dim.n as f64 - 2.0) / 2.0;
    gegenbauer(alpha, k, theta.cos())
}

/// d/d theta of the eigenfunction, via d/dx C_k^a = 2a C_{k-1}^{a+1}.
fn angular_eigenfunction_dtheta(dim: &Dim, k: usize, theta: f64) -> f64 {
    if dim.n == 2 {
        return -(k as f64) * (k as f64 * theta).sin();
    }
    if k == 0 {
        return 0.0;
    }
    let alpha = (dim.n as f64 - 2.0) / 2.0;
    let dx = 2.0 * alpha * gegenbauer(alpha + 1.0, k - 1, theta.cos());
    -theta.sin() * dx
}

fn gegenbauer(alpha: f64, k: usize, x: f64) -> f64 {
    match k {
        0 => 1.0,
        1 => 2.0 * alpha * x,
        _ => {
            let mut c0 = 1.0;
            let mut c1 = 2.0 * alpha * x;
            for j in 2..=k {
                let jf = j as f64;
                let c2 = (2.0 * x * (jf + alpha - 1.0) * c1 - (jf + 2.0 * alpha - 2.0) * c0) / jf;
                c0 = c1;
                c1 = c2;
            }
            c1
        }
    }
}

/// One angular mode: eigenfunction degree and the radial amplitude,
/// represented as a weighted sum of profiles.
#[derive(Debug, Clone)]
struct Mode {
    k: usize,
    parts: Vec<(f64, RadialProfile)>,
}

impl Mode {
    fn jet(&self, r: f64, order: usize) -> Result<Jet> {
        let mut acc = Jet::zero(order);
        for (c, p) in &self.parts {
            acc = acc.add(&p.jet(r, order)?.scale(*c));
        }
        Ok(acc)
    }

    fn value(&self, r: f64) -> Result<f64> {
        Ok(self.jet(r, 0)?.value())
    }
}

/// An axisymmetric conformal factor w(r, theta) on a polar quadrature grid.
#[derive(Debug, Clone)]
pub struct SphericalField {
    pub dim: Dim,
    pub r_grid: Vec<f64>,
    pub theta: Vec<f64>,
    /// Quadrature weights carrying sin^{n-2}, normalized to unit total.
    pub weights: Vec<f64>,
    pub values: Vec<Vec<f64>>,
    modes: Vec<Mode>,
    punctured: bool,
}

fn polar_nodes(dim: &Dim, count: usize) -> (Vec<f64>, Vec<f64>) {
    let (xs, ws) = gauss_legendre(count);
    let theta: Vec<f64> = xs.iter().map(|x| 0.5 * PI * (x + 1.0)).collect();
    let mut weights: Vec<f64> = theta
        .iter()
        .zip(&ws)
        .map(|(t, w)| w * t.sin().powi(dim.n as i32 - 2))
        .collect();
    let total: f64 = weights.iter().sum();
    for w in &mut weights {
        *w /= total;
    }
    (theta, weights)
}

impl SphericalField {
    /// Build a field w = base(r) + sum_j cos^{p_j}(theta) eta_j(r). The
    /// cosine powers are projected onto the angular eigenfunctions once, by
    /// quadrature, so mode amplitudes stay exact linear combinations of the
    /// given radial profiles.
    pub fn from_cos_powers(
        dim: &Dim,
        base: &RadialProfile,
        perturbations: &[(usize, RadialProfile)],
        r_grid: Vec<f64>,
        theta_count: usize,
    ) -> Result<SphericalField> {
        if theta_count < 8 {
            return Err(QcurvError::Resolution(
                "need at least 8 polar nodes".into(),
            ));
        }
        for pair in r_grid.windows(2) {
            if !(pair[1] > pair[0]) {
                return Err(QcurvError::Domain("r grid must be increasing".into()));
            }
        }
        let (theta, weights) = polar_nodes(dim, theta_count);
        let punctured = base.punctured() || perturbations.iter().any(|(_, p)| p.punctured());

        // Project each cosine power onto eigenfunctions 0..=p.
        let mut modes: Vec<Mode> = vec![Mode {
            k: 0,
            parts: vec![(1.0, base.clone())],
        }];
        for (p, eta) in perturbations {
            for k in 0..=*p {
                // <cos^p, Y_k> / <Y_k, Y_k> under the sin^{n-2} weight.
                let mut num = 0.0;
                let mut den = 0.0;
                for (t, w) in theta.iter().zip(&weights) {
                    let yk = angular_eigenfunction(dim, k, *t);
                    num += w * t.cos().powi(*p as i32) * yk;
                    den += w * yk * yk;
                }
                let coef = num / den;
                if coef.abs() < 1e-14 {
                    continue;
                }
                if let Some(mode) = modes.iter_mut().find(|m| m.k == k) {
                    mode.parts.push((coef, eta.clone()));
                } else {
                    modes.push(Mode {
                        k,
                        parts: vec![(coef, eta.clone())],
                    });
                }
            }
        }
        modes.sort_by_key(|m| m.k);

        let mut values = Vec::with_capacity(r_grid.len());
        for &r in &r_grid {
            let mut row = Vec::with_capacity(theta.len());
            for &t in &theta {
                let mut v = 0.0;
                for m in &modes {
                    v += m.value(r)? * angular_eigenfunction(dim, m.k, t);
                }
                row.push(v);
            }
            values.push(row);
        }
        Ok(SphericalField {
            dim: *dim,
            r_grid,
            theta,
            weights,
            values,
            modes,
            punctured,
        })
    }

    /// Build a field from raw grid values; mode amplitudes are extracted by
    /// discrete projection and interpolated radially.
    pub fn from_values(
        dim: &Dim,
        r_grid: Vec<f64>,
        theta_count: usize,
        values: Vec<Vec<f64>>,
        punctured: bool,
        max_modes: usize,
    ) -> Result<SphericalField> {
        if values.len() != r_grid.len() {
            return Err(QcurvError::Domain(
                "values rows must match the radial grid".into(),
            ));
        }
        let (theta, weights) = polar_nodes(dim, theta_count);
        for row in &values {
            if row.len() != theta.len() {
                return Err(QcurvError::Domain(
                    "values columns must match the polar nodes".into(),
                ));
            }
        }
        let kmax = max_modes.min(theta_count / 2);
        let mut modes = Vec::new();
        for k in 0..=kmax {
            let mut den = 0.0;
            for (t, w) in theta.iter().zip(&weights) {
                let yk = angular_eigenfunction(dim, k, *t);
                den += w * yk * yk;
            }
            let amps: Vec<f64> = values
                .iter()
                .map(|row| {
                    let mut num = 0.0;
                    for ((t, w), v) in theta.iter().zip(&weights).zip(row) {
                        num += w * v * angular_eigenfunction(dim, k, *t);
                    }
                    num / den
                })
                .collect();
            let scale = amps.iter().fold(0.0f64, |m, a| m.max(a.abs()));
            if scale < 1e-13 && k > 0 {
                continue;
            }
            let profile = RadialProfile::from_samples(&r_grid, &amps, dim.n, punctured)?;
            modes.push(Mode {
                k,
                parts: vec![(1.0, profile)],
            });
        }
        Ok(SphericalField {
            dim: *dim,
            r_grid,
            theta,
            weights,
            values,
            modes,
            punctured,
        })
    }

    pub fn is_radial(&self) -> bool {
        self.modes.iter().all(|m| m.k == 0)
    }

    pub fn punctured(&self) -> bool {
        self.punctured
    }

    /// Point evaluation from the mode expansion.
    pub fn eval(&self, r: f64, theta: f64) -> Result<f64> {
        let mut v = 0.0;
        for m in &self.modes {
            v += m.value(r)? * angular_eigenfunction(&self.dim, m.k, theta);
        }
        Ok(v)
    }

    /// Pointwise Delta^p w via the mode-wise radial operator
    /// L_k = d^2 + (n-1)/r d - k(k+n-2)/r^2.
    pub fn delta_power_at(&self, p: usize, r: f64, theta: f64) -> Result<f64> {
        let mut total = 0.0;
        for m in &self.modes {
            let jet = self.mode_delta_power_jet(m, p, r)?;
            total += jet.value() * angular_eigenfunction(&self.dim, m.k, theta);
        }
        Ok(total)
    }

    fn mode_delta_power_jet(&self, mode: &Mode, p: usize, r: f64) -> Result<Jet> {
        if mode.k > 0 && r == 0.0 {
            return Err(QcurvError::Resolution(
                "angular modes need r > 0 for the Laplacian".into(),
            ));
        }
        let mut jet = mode.jet(r, 2 * p)?;
        let lam = (mode.k * (mode.k + self.dim.n - 2)) as f64;
        for _ in 0..p {
            let flat = delta_jet(&jet, &self.dim, r)?;
            if mode.k == 0 {
                jet = flat;
            } else {
                let order = flat.order();
                let rr = Jet::var(r, order + 2);
                let r2 = rr.mul(&rr).truncate(order);
                jet = flat.sub(&jet.truncate(order).div(&r2).scale(lam));
            }
        }
        Ok(jet)
    }

    /// Gradient squared |grad w|^2 = (d_r w)^2 + (d_theta w / r)^2.
    pub fn grad_sq(&self, r: f64, theta: f64) -> Result<f64> {
        let mut dr = 0.0;
        let mut dt = 0.0;
        for m in &self.modes {
            let jet = m.jet(r, 1)?;
            dr += jet.deriv(1) * angular_eigenfunction(&self.dim, m.k, theta);
            dt += jet.value() * angular_eigenfunction_dtheta(&self.dim, m.k, theta);
        }
        Ok(dr * dr + (dt / r) * (dt / r))
    }

    /// Flat Laplacian of the field at a point (p = 1 power).
    pub fn laplacian_at(&self, r: f64, theta: f64) -> Result<f64> {
        self.delta_power_at(1, r, theta)
    }
}

/// Report of one symmetrization run.
#[derive(Debug, Serialize)]
pub struct SymmetrizationReport {
    pub shell_defect: f64,
    pub sign_preserved: Option<bool>,
    pub claim2_ratio: Vec<(f64, f64)>,
}

/// Symmetrize and assemble the full report: the averaged profile, the
/// max shell defect, the sign-gate outcome (None when the input itself
/// violates the gate) and the mean-ratio curve.
pub fn symmetrization_report(
    field: &SphericalField,
    dim: &Dim,
) -> Result<(RadialProfile, SymmetrizationReport)> {
    let wbar = spherical_symmetrize(field)?;
    let shell_defect = verify_shell_equality(field, dim)?;
    let sign_preserved = match verify_sign_preservation(field, dim) {
        Ok(b) => Some(b),
        Err(QcurvError::Precondition(_)) => None,
        Err(e) => return Err(e),
    };
    let claim2 = claim2_ratio(field)?;
    Ok((
        wbar,
        SymmetrizationReport {
            shell_defect,
            sign_preserved,
            claim2_ratio: claim2,
        },
    ))
}

/// Polar average of the field at each grid radius, returned as a radial
/// profile: the zero mode of the expansion.
pub fn spherical_symmetrize(field: &SphericalField) -> Result<RadialProfile> {
    let zero = field
        .modes
        .iter()
        .find(|m| m.k == 0)
        .ok_or_else(|| QcurvError::Domain("field carries no zero mode".into()))?;
    if zero.parts.iter().all(|(_, p)| p.is_analytic()) {
        let mut acc = RadialProfile::zero();
        for (c, p) in &zero.parts {
            acc = acc.add(&p.scale(*c)?)?;
        }
        return Ok(acc);
    }
    RadialProfile::linear_combination(&zero.parts)
}

/// Max over grid radii of the defect between the shell integrals of
/// Delta^m w-bar and Delta^m w (both by quadrature).
pub fn verify_shell_equality(field: &SphericalField, dim: &Dim) -> Result<f64> {
    let wbar = spherical_symmetrize(field)?;
    let mut max_defect = 0.0f64;
    for &r in &field.r_grid {
        if r == 0.0 {
            continue;
        }
        let shell_area = dim.sphere_volume * r.powi(dim.n as i32 - 1);
        // Radial side.
        let bar = crate::radial::delta_power_jet(&wbar, dim, dim.m, r, 0)?.value();
        // Angular side: quadrature of the pointwise m-fold Laplacian.
        let mut mean = 0.0;
        for (t, w) in field.theta.iter().zip(&field.weights) {
            mean += w * field.delta_power_at(dim.m, r, *t)?;
        }
        max_defect = max_defect.max(((bar - mean) * shell_area).abs());
    }
    Ok(max_defect)
}

/// Scalar-curvature sign gate on the full field and on its symmetrization.
/// Errors if the input field itself violates the gate; otherwise reports
/// whether the symmetrized profile satisfies it at every radius.
pub fn verify_sign_preservation(field: &SphericalField, dim: &Dim) -> Result<bool> {
    let tol = 1e-10;
    for &r in &field.r_grid {
        if r == 0.0 {
            continue;
        }
        for &t in &field.theta {
            let gate = field.laplacian_at(r, t)?
                + (dim.m as f64 - 1.0) * field.grad_sq(r, t)?;
            if gate > tol {
                return Err(QcurvError::Precondition(format!(
                    "input field violates the scalar-curvature gate at r = {r}, theta = {t}: {gate:e}"
                )));
            }
        }
    }
    let wbar = spherical_symmetrize(field)?;
    for &r in &field.r_grid {
        if r == 0.0 {
            continue;
        }
        let gate = crate::radial::sign_gate(&wbar, dim, r)?;
        if gate > tol {
            return Ok(false);
        }
    }
    Ok(true)
}

/// e^{-w-bar(r)} times the polar mean of e^w at each grid radius.
pub fn claim2_ratio(field: &SphericalField) -> Result<Vec<(f64, f64)>> {
    let wbar = spherical_symmetrize(field)?;
    let mut out = Vec::with_capacity(field.r_grid.len());
    for (i, &r) in field.r_grid.iter().enumerate() {
        let mut mean = 0.0;
        for (w, v) in field.weights.iter().zip(&field.values[i]) {
            mean += w * v.exp();
        }
        out.push((r, (-wbar.value(r)?).exp() * mean));
    }
    Ok(out)
}

/// Spherical mean of a function about an axial probe center (0,..,0,c) at
/// probe radius t. Reduces to a polar integral by axisymmetry.
pub fn mean_about_axial_point(
    eval: &dyn Fn(f64, f64) -> Result<f64>,
    dim: &Dim,
    center: f64,
    t: f64,
) -> Result<f64> {
    let (theta, weights) = polar_nodes(dim, 48);
    let mut acc = 0.0;
    for (psi, w) in theta.iter().zip(&weights) {
        let rr = (center * center + t * t + 2.0 * center * t * psi.cos()).sqrt();
        let ct = if rr == 0.0 {
            0.0
        } else {
            ((center + t * psi.cos()) / rr).clamp(-1.0, 1.0)
        };
        acc += w * eval(rr, ct.acos())?;
    }
    Ok(acc)
}
