//! Pointwise curvature operators of the conformally flat metric e^{2w} g_0.
//! Tensors are assembled in flat components at the point (r, 0, ..., 0);
//! radial symmetry makes this lossless. Small symmetric spectra go through
//! the Jacobi solver, derivative plumbing goes through jets.

use crate::dim::Dim;
use crate::error::{QcurvError, Result};
use crate::jet::Jet;
use crate::linalg::{elementary_symmetric, symmetric_eigenvalues};
use crate::profile::RadialProfile;
use crate::quad::integrate_to_infinity;
use crate::radial::{delta_jet, delta_power_jet};
use serde::Serialize;

/// Jet of the tangential Hessian entry w'/r (the limit w''(0) at the origin).
fn tangential_jet(w: &Jet, r: f64) -> Jet {
    let dw = w.differentiate();
    if r == 0.0 {
        let mut s = dw.clone();
        s.c[0] = 0.0;
        s.shift_down(1)
    } else {
        dw.div(&Jet::var(r, dw.order()))
    }
}

/// Jet of the scalar curvature R(r) with `order` derivative orders.
pub fn scalar_jet(p: &RadialProfile, dim: &Dim, r: f64, order: usize) -> Result<Jet> {
    let w = p.jet(r, order + 2)?;
    let dw = w.differentiate();
    let lap = delta_jet(&w, dim, r)?;
    let grad2 = dw.mul(&dw).truncate(lap.order());
    let inner = lap.add(&grad2.scale((dim.n as f64 - 2.0) / 2.0));
    let conf = w.scale(-2.0).exp().truncate(inner.order());
    Ok(conf.mul(&inner).scale(-2.0 * (dim.n as f64 - 1.0)))
}

/// Scalar curvature of the conformal metric at radius r.
pub fn scalar_curvature(p: &RadialProfile, dim: &Dim, r: f64) -> Result<f64> {
    Ok(scalar_jet(p, dim, r, 0)?.value())
}

fn radial_matrix(diag_rad: f64, diag_tan: f64, n: usize) -> Vec<f64> {
    let mut m = vec![0.0; n * n];
    for i in 0..n {
        m[i * n + i] = if i == 0 { diag_rad } else { diag_tan };
    }
    m
}

/// Ricci tensor in flat components at (r, 0, ..., 0).
pub fn ricci(p: &RadialProfile, dim: &Dim, r: f64) -> Result<Vec<f64>> {
    let n = dim.n as f64;
    let w = p.jet(r, 2)?;
    let wpp = w.deriv(2);
    let wp = w.deriv(1);
    let tan = tangential_jet(&w, r).value();
    let lap = delta_jet(&w, dim, r)?.value();
    let grad2 = wp * wp;
    // (2-n) w_ij - (Delta w) d_ij + (n-2)(w_i w_j - |grad w|^2 d_ij).
    let rad = (2.0 - n) * wpp - lap + (n - 2.0) * (grad2 - grad2);
    let tangential = (2.0 - n) * tan - lap + (n - 2.0) * (0.0 - grad2);
    Ok(radial_matrix(rad, tangential, dim.n))
}

/// Schouten tensor in flat components: -w_ij + w_i w_j - 1/2 |grad w|^2 d_ij.
pub fn schouten(p: &RadialProfile, dim: &Dim, r: f64) -> Result<Vec<f64>> {
    let w = p.jet(r, 2)?;
    let wpp = w.deriv(2);
    let wp = w.deriv(1);
    let tan = tangential_jet(&w, r).value();
    let grad2 = wp * wp;
    let rad = -wpp + grad2 - 0.5 * grad2;
    let tangential = -tan - 0.5 * grad2;
    Ok(radial_matrix(rad, tangential, dim.n))
}

/// sigma_k of the Schouten endomorphism eigenvalues carried by a frame.
pub fn sigma_k(frame: &CurvatureFrame, k: usize) -> Result<f64> {
    let n = frame.eigenvalues.len();
    if k < 1 || k > n {
        return Err(QcurvError::Index(format!(
            "sigma_k needs 1 <= k <= {n}, got {k}"
        )));
    }
    Ok(elementary_symmetric(&frame.eigenvalues)[k - 1])
}

/// Q-curvature through the flat-Laplacian power: e^{-n w} Delta^m w.
pub fn q_curvature_lcf(p: &RadialProfile, dim: &Dim, r: f64) -> Result<f64> {
    let lap_m = delta_power_jet(p, dim, dim.m, r, 0)?.value();
    let w = p.value(r)?;
    Ok((-(dim.n as f64) * w).exp() * lap_m)
}

/// Curved Laplacian at jet level: e^{-2w} (Delta u + (n-2) w' u').
pub fn curved_laplacian_jet(u: &Jet, w: &Jet, dim: &Dim, r: f64) -> Result<Jet> {
    let lap_u = delta_jet(u, dim, r)?;
    let order = lap_u.order();
    let du = u.differentiate().truncate(order);
    let dw = w.differentiate().truncate(order);
    let adv = dw.mul(&du).scale(dim.n as f64 - 2.0);
    let conf = w.scale(-2.0).exp().truncate(order);
    Ok(conf.mul(&lap_u.add(&adv)))
}

/// Laplace-Beltrami operator of the conformal metric applied to a radial u.
pub fn curved_laplacian(u: &RadialProfile, p: &RadialProfile, dim: &Dim, r: f64) -> Result<f64> {
    let uj = u.jet(r, 2)?;
    let wj = p.jet(r, 2)?;
    Ok(curved_laplacian_jet(&uj, &wj, dim, r)?.value())
}

/// Fourth-order curvature through the dimension-four contracted formula
/// (1/6)(-3 |Ric|_g^2 + R^2 - Delta_g R).
pub fn q4_general(p: &RadialProfile, dim: &Dim, r: f64) -> Result<f64> {
    if dim.n != 4 {
        return Err(QcurvError::Dimension(format!(
            "q4_general requires n = 4, got {}",
            dim.n
        )));
    }
    let w = p.jet(r, 2)?;
    let ric = ricci(p, dim, r)?;
    let frob: f64 = ric.iter().map(|v| v * v).sum();
    let ric_norm_g = (-4.0 * w.value()).exp() * frob;
    let r_jet = scalar_jet(p, dim, r, 2)?;
    let w4 = p.jet(r, 4)?;
    let lap_g_r = curved_laplacian_jet(&r_jet, &w4.truncate(r_jet.order()), dim, r)?.value();
    let scalar = r_jet.value();
    Ok((-3.0 * ric_norm_g + scalar * scalar - lap_g_r) / 6.0)
}

/// Paneitz operator on a radial function f for n = 4:
/// Delta_g^2 f + delta((2/3) R g - 2 Ric) d f, with delta the formal adjoint
/// of d (the sign that reduces to Delta^2 on the flat metric).
pub fn paneitz_apply(
    f: &RadialProfile,
    p: &RadialProfile,
    dim: &Dim,
    r: f64,
) -> Result<f64> {
    if dim.n != 4 {
        return Err(QcurvError::Dimension(format!(
            "paneitz_apply requires n = 4, got {}",
            dim.n
        )));
    }
    let fj = f.jet(r, 4)?;
    let wj = p.jet(r, 4)?;
    // Delta_g^2 f.
    let lap1 = curved_laplacian_jet(&fj, &wj, dim, r)?;
    let lap2 = curved_laplacian_jet(&lap1, &wj.truncate(lap1.order()), dim, r)?.value();
    // Middle term: -e^{-4w} flat-div of Phi, Phi_i = T_il f_l with
    // T = (2/3) R e^{2w} delta - 2 Ric in flat components.
    let r_jet = scalar_jet(p, dim, r, 1)?;
    let w2 = wj.truncate(3);
    let e2w = w2.scale(2.0).exp().truncate(1);
    let wpp = w2.differentiate().differentiate().truncate(1);
    let lap_w = delta_jet(&wj.truncate(3), dim, r)?.truncate(1);
    // Ric radial component: (2-n) w'' - Delta w (gradient pieces cancel).
    let ric_rad = wpp.scale(2.0 - dim.n as f64).sub(&lap_w);
    let t_rad = r_jet
        .truncate(1)
        .mul(&e2w)
        .scale(2.0 / 3.0)
        .sub(&ric_rad.scale(2.0));
    let df = fj.differentiate().truncate(1);
    let phi = t_rad.mul(&df); // Phi(r), order 1
    // Flat divergence of the radial field Phi(r) x^: Phi' + (n-1) Phi / r.
    let dphi = phi.differentiate().value();
    let phi_over_r = if r == 0.0 {
        phi.differentiate().value()
    } else {
        phi.value() / r
    };
    let div_phi = dphi + (dim.n as f64 - 1.0) * phi_over_r;
    let e_m4w = (-4.0 * wj.value()).exp();
    Ok(lap2 - e_m4w * div_phi)
}

/// Pfaffian variants for the frame assembly and the CLI.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum PfaffianVariant {
    SigmaRoute,
    Faf1Route,
    Div4Route,
}

/// Calibration constants measured on the round-sphere profile, where the
/// Euler characteristic pins every normalization unambiguously.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct Calibration {
    pub n: usize,
    /// Pfaffian = kappa_sigma * sigma_m for conformally flat metrics.
    pub kappa_sigma: f64,
    /// Ratio kappa_sigma / C_n (the printed constant would make this 1).
    pub kappa_over_cn: f64,
    /// n = 4 only: factor aligning the flat divergence-form expression with
    /// the Q + Delta_g J route.
    pub div4_calib: f64,
}

impl Calibration {
    pub fn compute(dim: &Dim) -> Result<Calibration> {
        let sphere = RadialProfile::round_sphere();
        // Total of sigma_m over the round sphere, by radial quadrature.
        let mut integrand = |r: f64| -> f64 {
            let eig = endo_eigenvalues(&sphere, dim, r).unwrap();
            let sig = elementary_symmetric(&eig)[dim.m - 1];
            let w = sphere.value(r).unwrap();
            sig * ((dim.n as f64) * w).exp() * r.powi(dim.n as i32 - 1)
        };
        let inner = crate::quad::integrate(&mut integrand, 0.0, 8.0, 1e-11)?;
        let (outer, _tail) = integrate_to_infinity(&mut integrand, 8.0, 1e-11)?;
        let total_sigma = dim.sphere_volume * (inner + outer);
        let kappa_sigma = 2.0 / total_sigma;

        let div4_calib = if dim.n == 4 {
            // Match the flat divergence-form expression against
            // C_4 (Q + Delta_g J) at a few reference radii.
            let mut ratios = Vec::new();
            for &r in &[0.0, 0.4, 0.9, 1.7] {
                let faf1 = pfaff_faf1_raw(&sphere, dim, r)?;
                let raw = div4_raw(&sphere, dim, r)?;
                ratios.push(faf1 / (dim.c_n * raw));
            }
            let mean = ratios.iter().sum::<f64>() / ratios.len() as f64;
            for v in &ratios {
                if (v - mean).abs() > 1e-8 * (1.0 + mean.abs()) {
                    return Err(QcurvError::Consistency(format!(
                        "div4 calibration not constant on the round sphere: {ratios:?}"
                    )));
                }
            }
            mean
        } else {
            f64::NAN
        };
        Ok(Calibration {
            n: dim.n,
            kappa_sigma,
            kappa_over_cn: kappa_sigma / dim.c_n,
            div4_calib,
        })
    }
}

/// Eigenvalues of the Schouten endomorphism e^{-2w} A at (r, 0, ..., 0).
pub fn endo_eigenvalues(p: &RadialProfile, dim: &Dim, r: f64) -> Result<Vec<f64>> {
    let a = schouten(p, dim, r)?;
    let conf = (-2.0 * p.value(r)?).exp();
    let mat: Vec<f64> = a.iter().map(|v| v * conf).collect();
    Ok(symmetric_eigenvalues(&mat, dim.n))
}

/// C_4 (Q + Delta_g J), the dimension-four Pfaffian route built from the
/// order-four curvature and the curved Laplacian of J.
fn pfaff_faf1_raw(p: &RadialProfile, dim: &Dim, r: f64) -> Result<f64> {
    let q = q_curvature_lcf(p, dim, r)?;
    let j_jet = scalar_jet(p, dim, r, 2)?.scale(1.0 / (2.0 * (dim.n as f64 - 1.0)));
    let w4 = p.jet(r, 4)?;
    let lap_g_j = curved_laplacian_jet(&j_jet, &w4.truncate(j_jet.order()), dim, r)?.value();
    Ok(dim.c_n * (q + lap_g_j))
}

/// Flat divergence-form expression
/// e^{-4w}((Dw)^2 - |D^2 w|^2 + 2 D^2 w(grad w, grad w) + |grad w|^2 Dw),
/// before calibration.
fn div4_raw(p: &RadialProfile, dim: &Dim, r: f64) -> Result<f64> {
    let w = p.jet(r, 2)?;
    let wpp = w.deriv(2);
    let wp = w.deriv(1);
    let tan = tangential_jet(&w, r).value();
    let lap = wpp + (dim.n as f64 - 1.0) * tan;
    let hess_frob = wpp * wpp + (dim.n as f64 - 1.0) * tan * tan;
    let grad2 = wp * wp;
    let hess_gg = wpp * grad2;
    let expr = lap * lap - hess_frob + 2.0 * hess_gg + grad2 * lap;
    Ok((-4.0 * w.value()).exp() * expr)
}

/// All pointwise curvature quantities at one radius.
#[derive(Debug, Clone, Serialize)]
pub struct CurvatureFrame {
    pub r: f64,
    pub w: f64,
    pub grad_w: Vec<f64>,
    pub hess_w: Vec<f64>,
    pub lap_w: f64,
    pub scalar: f64,
    pub ricci: Vec<f64>,
    pub schouten: Vec<f64>,
    pub j_invariant: f64,
    pub eigenvalues: Vec<f64>,
    pub sigma: Vec<f64>,
    pub q: f64,
    pub pfaff_sigma: f64,
    pub pfaff_faf1: Option<f64>,
    pub pfaff_div4: Option<f64>,
}

impl CurvatureFrame {
    pub fn at(p: &RadialProfile, dim: &Dim, r: f64, calib: &Calibration) -> Result<CurvatureFrame> {
        let w = p.jet(r, 2)?;
        let wp = w.deriv(1);
        let wpp = w.deriv(2);
        let tan = tangential_jet(&w, r).value();
        let lap_w = wpp + (dim.n as f64 - 1.0) * tan;
        let mut grad_w = vec![0.0; dim.n];
        grad_w[0] = wp;
        let hess_w = radial_matrix(wpp, tan, dim.n);
        let scalar = scalar_curvature(p, dim, r)?;
        let ric = ricci(p, dim, r)?;
        let a = schouten(p, dim, r)?;
        let j = scalar / (2.0 * (dim.n as f64 - 1.0));
        let eig = endo_eigenvalues(p, dim, r)?;
        let sigma: Vec<f64> = elementary_symmetric(&eig)[..dim.m].to_vec();
        let q = q_curvature_lcf(p, dim, r)?;
        let pfaff_sigma = calib.kappa_sigma * sigma[dim.m - 1];
        let (pfaff_faf1, pfaff_div4) = if dim.n == 4 {
            (
                Some(pfaff_faf1_raw(p, dim, r)?),
                Some(dim.c_n * calib.div4_calib * div4_raw(p, dim, r)?),
            )
        } else {
            (None, None)
        };
        Ok(CurvatureFrame {
            r,
            w: w.value(),
            grad_w,
            hess_w,
            lap_w,
            scalar,
            ricci: ric,
            schouten: a,
            j_invariant: j,
            eigenvalues: eig,
            sigma,
            q,
            pfaff_sigma,
            pfaff_faf1,
            pfaff_div4,
        })
    }
}

/// Pfaffian of a frame through the requested route.
pub fn pfaffian(frame: &CurvatureFrame, dim: &Dim, variant: PfaffianVariant) -> Result<f64> {
    match variant {
        PfaffianVariant::SigmaRoute => Ok(frame.pfaff_sigma),
        PfaffianVariant::Faf1Route => frame.pfaff_faf1.ok_or_else(|| {
            QcurvError::Dimension(format!("faf1 route requires n = 4, frame has n = {}", dim.n))
        }),
        PfaffianVariant::Div4Route => frame.pfaff_div4.ok_or_else(|| {
            QcurvError::Dimension(format!("div4 route requires n = 4, frame has n = {}", dim.n))
        }),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dim::make_dim;
    use std::f64::consts::PI;

    fn d4() -> Dim {
        make_dim(4).unwrap()
    }

    #[test]
    fn flat_metric_vanishes() {
        let dim = d4();
        let p = RadialProfile::zero();
        assert_eq!(scalar_curvature(&p, &dim, 1.3).unwrap(), 0.0);
        assert!(ricci(&p, &dim, 0.7).unwrap().iter().all(|v| *v == 0.0));
        assert!(schouten(&p, &dim, 2.0).unwrap().iter().all(|v| *v == 0.0));
        assert_eq!(q_curvature_lcf(&p, &dim, 1.0).unwrap(), 0.0);
        assert_eq!(q4_general(&p, &dim, 1.0).unwrap(), 0.0);
    }

    #[test]
    fn round_sphere_scalar_and_ricci() {
        let dim = d4();
        let p = RadialProfile::round_sphere();
        for &r in &[0.0, 0.3, 1.0, 2.5, 7.0] {
            let s = scalar_curvature(&p, &dim, r).unwrap();
            assert!((s - 12.0).abs() < 1e-9, "R at {r}: {s}");
        }
        // Flat components at r = 0: Ric = 3 e^{2w} I = 12 I.
        let ric = ricci(&p, &dim, 0.0).unwrap();
        for i in 0..4 {
            for j in 0..4 {
                let expect = if i == j { 12.0 } else { 0.0 };
                assert!((ric[i * 4 + j] - expect).abs() < 1e-10);
            }
        }
        // Schouten at r = 0: 2 I.
        let a = schouten(&p, &dim, 0.0).unwrap();
        for i in 0..4 {
            assert!((a[i * 4 + i] - 2.0).abs() < 1e-10);
        }
        // Symmetry of the assembled tensors.
        let ric = ricci(&p, &dim, 1.7).unwrap();
        for i in 0..4 {
            for j in 0..4 {
                assert_eq!(ric[i * 4 + j], ric[j * 4 + i]);
            }
        }
    }

    #[test]
    fn w_minus_half_scalar_at_origin() {
        // w = -1/2 ln(1 + r^2): Delta w(0) = -4, R(0) = 24.
        let dim = d4();
        let p = RadialProfile::w_a(-1.0);
        let s = scalar_curvature(&p, &dim, 0.0).unwrap();
        assert!((s - 24.0).abs() < 1e-10, "got {s}");
    }

    #[test]
    fn cylinder_schouten_eigenvalues() {
        let dim = d4();
        let p = RadialProfile::cylinder();
        let eig = endo_eigenvalues(&p, &dim, 1.0).unwrap();
        assert!((eig[0] + 0.5).abs() < 1e-12);
        for e in &eig[1..] {
            assert!((e - 0.5).abs() < 1e-12);
        }
        // sigma_2 = 0 for the cylinder.
        let calib = Calibration::compute(&dim).unwrap();
        let frame = CurvatureFrame::at(&p, &dim, 1.0, &calib).unwrap();
        assert!(sigma_k(&frame, 2).unwrap().abs() < 1e-12);
        // And at other radii.
        let frame = CurvatureFrame::at(&p, &dim, 3.7, &calib).unwrap();
        assert!(sigma_k(&frame, 2).unwrap().abs() < 1e-12);
    }

    #[test]
    fn round_sphere_sigma2() {
        let dim = d4();
        let calib = Calibration::compute(&dim).unwrap();
        let frame = CurvatureFrame::at(&RadialProfile::round_sphere(), &dim, 0.9, &calib).unwrap();
        // Eigenvalues all 1/2; sigma_2 = C(4,2)/4 = 3/2.
        for e in &frame.eigenvalues {
            assert!((e - 0.5).abs() < 1e-10);
        }
        assert!((sigma_k(&frame, 2).unwrap() - 1.5).abs() < 1e-9);
        // sigma_1 = J.
        assert!((frame.sigma[0] - frame.j_invariant).abs() < 1e-10);
    }

    #[test]
    fn q_curvature_round_sphere() {
        let dim = d4();
        let p = RadialProfile::round_sphere();
        for &r in &[0.0, 0.5, 1.0, 3.0] {
            let q = q_curvature_lcf(&p, &dim, r).unwrap();
            assert!((q - 6.0).abs() < 1e-8, "Q at {r}: {q}");
            let q4 = q4_general(&p, &dim, r).unwrap();
            assert!((q4 - 6.0).abs() < 1e-8, "Q4 at {r}: {q4}");
        }
        // Cylinder: Delta^2 ln r = 0 away from the puncture.
        let cyl = RadialProfile::cylinder();
        for &r in &[0.5, 1.0, 2.0] {
            assert!(q_curvature_lcf(&cyl, &dim, r).unwrap().abs() < 1e-12);
        }
    }

    #[test]
    fn q4_routes_agree_on_w_family() {
        let dim = d4();
        let p = RadialProfile::w_a(-1.0);
        for i in 0..30 {
            let r = 10.0 * i as f64 / 29.0;
            let a = q_curvature_lcf(&p, &dim, r).unwrap();
            let b = q4_general(&p, &dim, r).unwrap();
            let denom = if a.abs() > 1e-3 { a.abs() } else { 1.0 };
            assert!(
                (a - b).abs() / denom < 1e-6,
                "r = {r}: lcf {a} vs general {b}"
            );
        }
    }

    #[test]
    fn curved_laplacian_basics() {
        let dim = d4();
        let p = RadialProfile::round_sphere();
        // Constant input: 0.
        let c = RadialProfile::constant(2.0);
        assert_eq!(curved_laplacian(&c, &p, &dim, 1.0).unwrap(), 0.0);
        // Flat metric: reduces to the flat Laplacian.
        let u = RadialProfile::analytic(
            vec![crate::profile::Term {
                coeff: 1.0,
                kind: crate::profile::TermKind::Power { p: 2.0 },
            }],
            false,
        )
        .unwrap();
        let flat = RadialProfile::zero();
        assert!((curved_laplacian(&u, &flat, &dim, 1.2).unwrap() - 8.0).abs() < 1e-12);
    }

    #[test]
    fn paneitz_flat_is_bilaplacian() {
        let dim = d4();
        let flat = RadialProfile::zero();
        // f = r^4: Delta^2 r^4 = 192.
        let f = RadialProfile::analytic(
            vec![crate::profile::Term {
                coeff: 1.0,
                kind: crate::profile::TermKind::Power { p: 4.0 },
            }],
            false,
        )
        .unwrap();
        let v = paneitz_apply(&f, &flat, &dim, 1.1).unwrap();
        assert!((v - 192.0).abs() < 1e-9, "got {v}");
        // Constant f: 0.
        let c = RadialProfile::constant(5.0);
        assert!(paneitz_apply(&c, &flat, &dim, 0.8).unwrap().abs() < 1e-12);
    }

    #[test]
    fn paneitz_conformal_identity() {
        // P_{4,w} f = e^{-4w} Delta^2 f for conformally flat metrics.
        let dim = d4();
        let p = RadialProfile::w_a(-0.7);
        let f = RadialProfile::from_function(&|r: f64| (-r * r).exp(), 0.0, 6.0, 4, false).unwrap();
        for i in 0..12 {
            let r = 0.1 + 2.9 * i as f64 / 11.0;
            let lhs = paneitz_apply(&f, &p, &dim, r).unwrap();
            let fj = f.jet(r, 4).unwrap();
            let flat_sq = delta_jet(
                &delta_jet(&fj, &dim, r).unwrap(),
                &dim,
                r,
            )
            .unwrap()
            .value();
            let rhs = (-4.0 * p.value(r).unwrap()).exp() * flat_sq;
            assert!(
                (lhs - rhs).abs() < 1e-5 * (1.0 + rhs.abs()),
                "r = {r}: paneitz {lhs} vs conformal {rhs}"
            );
        }
    }

    #[test]
    fn calibration_on_round_sphere() {
        let dim = d4();
        let calib = Calibration::compute(&dim).unwrap();
        // kappa_4 = 1/(2 pi^2) = 4 C_4.
        let expect = 1.0 / (2.0 * PI * PI);
        assert!(
            (calib.kappa_sigma - expect).abs() < 1e-6,
            "kappa = {}, expected {expect}",
            calib.kappa_sigma
        );
        assert!((calib.kappa_over_cn - 4.0).abs() < 1e-5);
        assert!((calib.div4_calib - 2.0).abs() < 1e-6, "div4 calib = {}", calib.div4_calib);
    }

    #[test]
    fn pfaffian_variants_agree_after_calibration() {
        let dim = d4();
        let calib = Calibration::compute(&dim).unwrap();
        for profile in [
            RadialProfile::round_sphere(),
            RadialProfile::w_a(-1.0),
            RadialProfile::w_a(0.6),
        ] {
            for &r in &[0.0, 0.5, 1.4, 3.0] {
                let frame = CurvatureFrame::at(&profile, &dim, r, &calib).unwrap();
                let s = pfaffian(&frame, &dim, PfaffianVariant::SigmaRoute).unwrap();
                let f1 = pfaffian(&frame, &dim, PfaffianVariant::Faf1Route).unwrap();
                let dv = pfaffian(&frame, &dim, PfaffianVariant::Div4Route).unwrap();
                assert!(
                    (s - f1).abs() < 1e-5 * (1.0 + s.abs()),
                    "sigma {s} vs faf1 {f1} at r = {r}"
                );
                assert!(
                    (dv - f1).abs() < 1e-5 * (1.0 + f1.abs()),
                    "div4 {dv} vs faf1 {f1} at r = {r}"
                );
            }
        }
    }

    #[test]
    fn pfaffian_flat_and_cylinder() {
        let dim = d4();
        let calib = Calibration::compute(&dim).unwrap();
        let flat_frame = CurvatureFrame::at(&RadialProfile::zero(), &dim, 1.0, &calib).unwrap();
        for v in [
            PfaffianVariant::SigmaRoute,
            PfaffianVariant::Faf1Route,
            PfaffianVariant::Div4Route,
        ] {
            assert!(pfaffian(&flat_frame, &dim, v).unwrap().abs() < 1e-12);
        }
        let cyl_frame = CurvatureFrame::at(&RadialProfile::cylinder(), &dim, 1.7, &calib).unwrap();
        assert!(
            pfaffian(&cyl_frame, &dim, PfaffianVariant::SigmaRoute)
                .unwrap()
                .abs()
                < 1e-12
        );
    }

    #[test]
    fn schouten_consistency_with_ricci() {
        // A = (Ric - J g)/(n-2) in flat components, n >= 4.
        let dim = d4();
        let p = RadialProfile::w_a(-0.9);
        for &r in &[0.0, 0.4, 1.0, 2.7, 6.0] {
            let a = schouten(&p, &dim, r).unwrap();
            let ric = ricci(&p, &dim, r).unwrap();
            let j = scalar_curvature(&p, &dim, r).unwrap() / 6.0;
            let e2w = (2.0 * p.value(r).unwrap()).exp();
            let norm_a: f64 = a.iter().map(|v| v * v).sum::<f64>().sqrt();
            for i in 0..4 {
                for l in 0..4 {
                    let g = if i == l { e2w } else { 0.0 };
                    let expect = (ric[i * 4 + l] - j * g) / 2.0;
                    assert!(
                        (a[i * 4 + l] - expect).abs() < 1e-9 * (1.0 + norm_a),
                        "entry ({i},{l}) at r = {r}"
                    );
                }
            }
        }
    }

    #[test]
    fn newton_identity_for_sigma2() {
        // sigma_2 = 1/2 ((tr)^2 - sum of squares) of the endomorphism.
        let dim = d4();
        let p = RadialProfile::w_a(-0.9);
        for &r in &[0.0, 0.7, 2.2] {
            let eig = endo_eigenvalues(&p, &dim, r).unwrap();
            let tr: f64 = eig.iter().sum();
            let sq: f64 = eig.iter().map(|e| e * e).sum();
            let newton = 0.5 * (tr * tr - sq);
            let brute: f64 = (0..4)
                .flat_map(|i| (i + 1..4).map(move |j| (i, j)))
                .map(|(i, j)| eig[i] * eig[j])
                .sum();
            assert!((newton - brute).abs() < 1e-9 * (1.0 + brute.abs()));
        }
    }

    #[test]
    fn sampled_profile_round_trips_curvature() {
        // Curvature quantities from a sampled rebuild of an analytic profile
        // agree within 10 eps_quad.
        let dim = d4();
        let exact = RadialProfile::w_a(-0.8);
        let grid = crate::profile::recommended_grid(20.0, 160);
        let w: Vec<f64> = grid.iter().map(|&r| exact.value(r).unwrap()).collect();
        let sampled = RadialProfile::from_samples(&grid, &w, 4, false).unwrap();
        for &r in &[0.0, 0.5, 1.5, 4.0, 12.0] {
            let sa = scalar_curvature(&exact, &dim, r).unwrap();
            let sb = scalar_curvature(&sampled, &dim, r).unwrap();
            assert!((sa - sb).abs() < 1e-4 * (1.0 + sa.abs()), "R at {r}");
            let qa = q_curvature_lcf(&exact, &dim, r).unwrap();
            let qb = q_curvature_lcf(&sampled, &dim, r).unwrap();
            assert!((qa - qb).abs() < 1e-4 * (1.0 + qa.abs()), "Q at {r}: {qa} vs {qb}");
        }
    }

    #[test]
    fn scalar_sign_matches_gate() {
        // R >= 0 exactly where Delta w + (m-1)|grad w|^2 <= 0.
        let dim = d4();
        for p in [
            RadialProfile::w_a(-1.0),
            RadialProfile::w_a(0.9),
            RadialProfile::round_sphere(),
            RadialProfile::cylinder(),
        ] {
            let lo = if p.punctured() { 0.2 } else { 0.0 };
            for i in 0..20 {
                let r = lo + 8.0 * i as f64 / 19.0;
                let gate = crate::radial::sign_gate(&p, &dim, r).unwrap();
                let scalar = scalar_curvature(&p, &dim, r).unwrap();
                assert!(
                    (scalar >= -1e-10) == (gate <= 1e-10),
                    "sign mismatch at r = {r}: R = {scalar}, gate = {gate}"
                );
            }
        }
    }

    #[test]
    fn conformal_transformation_law() {
        // Q_{w+phi} e^{n(w+phi)} - Q_w e^{n w} = Delta^m phi, pointwise.
        let dim = d4();
        let w = RadialProfile::w_a(-0.6);
        let phi = RadialProfile::analytic(
            vec![crate::profile::Term {
                coeff: 0.4,
                kind: crate::profile::TermKind::Log1pSq { rho: 1.7 },
            }],
            false,
        )
        .unwrap();
        let sum = w.add(&phi).unwrap();
        for &r in &[0.0, 0.5, 1.3, 4.0] {
            let lhs = q_curvature_lcf(&sum, &dim, r).unwrap()
                * (4.0 * sum.value(r).unwrap()).exp()
                - q_curvature_lcf(&w, &dim, r).unwrap() * (4.0 * w.value(r).unwrap()).exp();
            let rhs = delta_power_jet(&phi, &dim, 2, r, 0).unwrap().value();
            assert!(
                (lhs - rhs).abs() < 1e-5 * (1.0 + rhs.abs()),
                "r = {r}: {lhs} vs {rhs}"
            );
        }
    }
}
