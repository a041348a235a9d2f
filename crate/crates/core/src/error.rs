use thiserror::Error;

/// Error type shared by every module of the toolkit.
#[derive(Debug, Error)]
pub enum QcurvError {
    #[error("dimension error: {0}")]
    Dimension(String),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("derivative order error: {0}")]
    Order(String),
    #[error("quadrature did not converge: {0}")]
    Quadrature(String),
    #[error("integrability error: {0}")]
    Integrability(String),
    #[error("limit extrapolation did not converge: {0}")]
    Limit(String),
    #[error("index out of range: {0}")]
    Index(String),
    #[error("kernel structure violation: {0}")]
    StructureViolation(String),
    #[error("function is not polyharmonic: residual {residual:e} exceeds {threshold:e}")]
    NotPolyharmonic { residual: f64, threshold: f64 },
    #[error("angular resolution too coarse: {0}")]
    Resolution(String),
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("end decomposition error: {0}")]
    Decomposition(String),
    #[error("cutoff error: {0}")]
    Cutoff(String),
    #[error("level set error: {0}")]
    LevelSet(String),
    #[error("consistency check failed: {0}")]
    Consistency(String),
    #[error("input schema error: {0}")]
    Schema(String),
    #[error("profile error: {0}")]
    Profile(String),
}

pub type Result<T> = std::result::Result<T, QcurvError>;
