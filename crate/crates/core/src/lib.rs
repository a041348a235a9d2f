//! Numerical toolkit for the curvature quantities of conformally flat
//! metrics g = e^{2w} g_0 on R^n (n even): pointwise curvature operators,
//! spherical-mean kernels and the log-kernel Green solver, radial asymptotics
//! and completeness classification, spherical symmetrization, total-curvature
//! bookkeeping and the dimension-four level-set identities.

pub mod averaging;
pub mod cheb;
pub mod cli;
pub mod curvature;
pub mod dim;
pub mod error;
pub mod gbc;
pub mod jet;
pub mod kernels;
pub mod linalg;
pub mod prng;
pub mod profile;
pub mod quad;
pub mod radial;
pub mod suite;

pub use dim::{make_dim, Dim};
pub use error::{QcurvError, Result};
pub use profile::{RadialProfile, Term, TermKind};
pub use quad::QuadratureSpec;
