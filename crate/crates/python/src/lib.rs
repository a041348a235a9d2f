//! Python bindings for the conformal-curvature toolkit: profiles, pointwise
//! curvature, kernels and the verification reports. Structured reports come
//! back as JSON strings so Python callers can `json.loads` them.

use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use qcurv::curvature::{self, Calibration, CurvatureFrame};
use qcurv::dim::make_dim;
use qcurv::error::QcurvError;
use qcurv::gbc;
use qcurv::kernels;
use qcurv::profile::{RadialProfile, Term, TermKind};
use qcurv::quad::QuadratureSpec;
use qcurv::radial::{self, EndLocation};

fn err(e: QcurvError) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn spec_with(r_max: Option<f64>, eps_quad: Option<f64>) -> PyResult<QuadratureSpec> {
    let mut spec = QuadratureSpec::default();
    if let Some(r) = r_max {
        spec.r_max = r;
    }
    if let Some(e) = eps_quad {
        spec.eps_quad = e;
    }
    spec.validate().map_err(err)?;
    Ok(spec)
}

/// Dimension constants for even n.
#[pyfunction]
fn dim_constants(n: usize) -> PyResult<(usize, f64, f64)> {
    let d = make_dim(n).map_err(err)?;
    Ok((d.m, d.sphere_volume, d.c_n))
}

/// A radial conformal factor w(r).
#[pyclass(name = "Profile", skip_from_py_object)]
#[derive(Clone)]
struct PyProfile {
    inner: RadialProfile,
}

#[pymethods]
impl PyProfile {
    /// Build from analytic terms: a list of ("log1p_sq", c, rho),
    /// ("log", c) or ("power", c, p) tuples.
    #[new]
    #[pyo3(signature = (terms, punctured_origin = false))]
    fn new(terms: Vec<(String, f64, Option<f64>)>, punctured_origin: bool) -> PyResult<Self> {
        let mut parsed = Vec::with_capacity(terms.len());
        for (kind, c, extra) in terms {
            let kind = match kind.as_str() {
                "log1p_sq" => TermKind::Log1pSq {
                    rho: extra
                        .ok_or_else(|| PyValueError::new_err("log1p_sq needs rho"))?,
                },
                "log" => TermKind::Log,
                "power" => TermKind::Power {
                    p: extra.ok_or_else(|| PyValueError::new_err("power needs exponent"))?,
                },
                other => {
                    return Err(PyValueError::new_err(format!("unknown term kind {other:?}")))
                }
            };
            parsed.push(Term { coeff: c, kind });
        }
        Ok(PyProfile {
            inner: RadialProfile::analytic(parsed, punctured_origin).map_err(err)?,
        })
    }

    /// The family w_a = (a/2) ln(1 + r^2).
    #[staticmethod]
    fn w_a(a: f64) -> PyProfile {
        PyProfile {
            inner: RadialProfile::w_a(a),
        }
    }

    /// Stereographic round-sphere factor.
    #[staticmethod]
    fn round_sphere() -> PyProfile {
        PyProfile {
            inner: RadialProfile::round_sphere(),
        }
    }

    /// Cylinder factor -ln r on the punctured space.
    #[staticmethod]
    fn cylinder() -> PyProfile {
        PyProfile {
            inner: RadialProfile::cylinder(),
        }
    }

    /// Interpolate samples (r_i, w_i); derivatives available to `order`.
    #[staticmethod]
    #[pyo3(signature = (r, w, order = 4, punctured_origin = false))]
    fn from_samples(
        r: Vec<f64>,
        w: Vec<f64>,
        order: usize,
        punctured_origin: bool,
    ) -> PyResult<PyProfile> {
        Ok(PyProfile {
            inner: RadialProfile::from_samples(&r, &w, order, punctured_origin).map_err(err)?,
        })
    }

    /// d^order w / dr^order at r.
    #[pyo3(signature = (r, order = 0))]
    fn eval(&self, r: f64, order: usize) -> PyResult<f64> {
        self.inner.eval(r, order).map_err(err)
    }

    fn punctured(&self) -> bool {
        self.inner.punctured()
    }

    fn __repr__(&self) -> String {
        format!("Profile(punctured={})", self.inner.punctured())
    }
}

#[pyfunction]
fn scalar_curvature(p: &PyProfile, n: usize, r: f64) -> PyResult<f64> {
    let dim = make_dim(n).map_err(err)?;
    curvature::scalar_curvature(&p.inner, &dim, r).map_err(err)
}

#[pyfunction]
fn q_curvature(p: &PyProfile, n: usize, r: f64) -> PyResult<f64> {
    let dim = make_dim(n).map_err(err)?;
    curvature::q_curvature_lcf(&p.inner, &dim, r).map_err(err)
}

#[pyfunction]
fn q4_general(p: &PyProfile, r: f64) -> PyResult<f64> {
    let dim = make_dim(4).map_err(err)?;
    curvature::q4_general(&p.inner, &dim, r).map_err(err)
}

/// Full curvature frame at one radius, as JSON.
#[pyfunction]
fn curvature_frame_json(p: &PyProfile, n: usize, r: f64) -> PyResult<String> {
    let dim = make_dim(n).map_err(err)?;
    let calib = Calibration::compute(&dim).map_err(err)?;
    let frame = CurvatureFrame::at(&p.inner, &dim, r, &calib).map_err(err)?;
    serde_json::to_string(&frame).map_err(|e| PyValueError::new_err(e.to_string()))
}

/// Spherical mean of 1/|x-y|^2 over the r-sphere against |y| = s.
#[pyfunction]
#[pyo3(signature = (r, s, n = 4))]
fn kernel_ii(r: f64, s: f64, n: usize) -> PyResult<f64> {
    let dim = make_dim(n).map_err(err)?;
    kernels::kernel_ii(r, s, &dim, &QuadratureSpec::default()).map_err(err)
}

#[pyfunction]
#[pyo3(signature = (r, s, n = 4))]
fn kernel_log(r: f64, s: f64, n: usize) -> PyResult<f64> {
    let dim = make_dim(n).map_err(err)?;
    kernels::kernel_log(r, s, &dim, &QuadratureSpec::default()).map_err(err)
}

/// Total order-n curvature C_n int Q dv over R^n.
#[pyfunction]
#[pyo3(signature = (p, n = 4, r_max = None, eps_quad = None))]
fn total_q(p: &PyProfile, n: usize, r_max: Option<f64>, eps_quad: Option<f64>) -> PyResult<f64> {
    let dim = make_dim(n).map_err(err)?;
    let spec = spec_with(r_max, eps_quad)?;
    gbc::total_q(&p.inner, &dim, &spec).map_err(err)
}

/// Inequality verifier report, as JSON.
#[pyfunction]
#[pyo3(signature = (p, n = 4, r_max = None, eps_quad = None))]
fn gbc_verify_json(
    p: &PyProfile,
    n: usize,
    r_max: Option<f64>,
    eps_quad: Option<f64>,
) -> PyResult<String> {
    let dim = make_dim(n).map_err(err)?;
    let spec = spec_with(r_max, eps_quad)?;
    let rep = gbc::verify_gbc_rn(&p.inner, &dim, &spec).map_err(err)?;
    serde_json::to_string(&rep).map_err(|e| PyValueError::new_err(e.to_string()))
}

/// Asymptotic exponent of r w'(r) at the chosen end ("origin"/"infinity").
#[pyfunction]
fn asymptotic_exponent(p: &PyProfile, end: &str) -> PyResult<f64> {
    let loc = match end {
        "origin" => EndLocation::Origin,
        "infinity" => EndLocation::Infinity,
        other => return Err(PyValueError::new_err(format!("unknown end {other:?}"))),
    };
    let (c1, _) = radial::asymptotic_exponent(&p.inner, loc).map_err(err)?;
    Ok(c1)
}

#[pyfunction]
fn is_complete(p: &PyProfile, end: &str) -> PyResult<bool> {
    let loc = match end {
        "origin" => EndLocation::Origin,
        "infinity" => EndLocation::Infinity,
        other => return Err(PyValueError::new_err(format!("unknown end {other:?}"))),
    };
    Ok(radial::completeness_check(&p.inner, loc)
        .map_err(err)?
        .is_complete())
}

/// Run the whole verification battery; returns the JSON report.
#[pyfunction]
#[pyo3(signature = (seed = 20240817))]
fn run_suite_json(seed: u64) -> PyResult<String> {
    let spec = QuadratureSpec::default();
    let rep = qcurv::suite::run_suite(seed, &spec, false).map_err(err)?;
    serde_json::to_string(&rep).map_err(|e| PyValueError::new_err(e.to_string()))
}

#[pymodule]
fn qcurv_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyProfile>()?;
    m.add_function(wrap_pyfunction!(dim_constants, m)?)?;
    m.add_function(wrap_pyfunction!(scalar_curvature, m)?)?;
    m.add_function(wrap_pyfunction!(q_curvature, m)?)?;
    m.add_function(wrap_pyfunction!(q4_general, m)?)?;
    m.add_function(wrap_pyfunction!(curvature_frame_json, m)?)?;
    m.add_function(wrap_pyfunction!(kernel_ii, m)?)?;
    m.add_function(wrap_pyfunction!(kernel_log, m)?)?;
    m.add_function(wrap_pyfunction!(total_q, m)?)?;
    m.add_function(wrap_pyfunction!(gbc_verify_json, m)?)?;
    m.add_function(wrap_pyfunction!(asymptotic_exponent, m)?)?;
    m.add_function(wrap_pyfunction!(is_complete, m)?)?;
    m.add_function(wrap_pyfunction!(run_suite_json, m)?)?;
    Ok(())
}
