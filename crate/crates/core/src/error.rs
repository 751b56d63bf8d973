use thiserror::Error;

/// Errors surfaced by model construction and the optimizer.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("invalid geometry: {0}")]
    InvalidGeometry(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("conic program is malformed: {0}")]
    MalformedProgram(String),

    #[error("curvature constant must be nonnegative, got {0}")]
    NegativeCurvature(f64),

    #[error("boresight step failed after {0} curvature doublings")]
    StepFailed(usize),
}

pub type Result<T> = std::result::Result<T, Error>;
