use thiserror::Error;

/// Failure modes shared by every module of the toolkit.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Sigma2Error {
    #[error("dimension {got} outside supported range {min}..={max}")]
    Dimension { got: usize, min: usize, max: usize },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("matrix is not symmetric at ({row}, {col})")]
    NotSymmetric { row: usize, col: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("inadmissible state: {0}")]
    Inadmissible(String),

    #[error("solver failed to converge: {reason} (last good t = {last_good_t})")]
    NonConvergence { reason: String, last_good_t: f64 },
}

pub type Result<T> = std::result::Result<T, Sigma2Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Sigma2Error {
    Sigma2Error::InvalidArgument(msg.into())
}
