use thiserror::Error;

/// Errors raised across the estimation and diagnostics pipeline.
#[derive(Debug, Error)]
pub enum FglmError {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("matrix is not symmetric (max asymmetry {0:e})")]
    NotSymmetric(f64),

    #[error("sample size n = {n} is below the minimum of {min}")]
    SampleTooSmall { n: usize, min: usize },

    #[error("log-likelihood diverged at iteration {iteration}")]
    Divergence { iteration: usize },

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("config error at line {line}: {message}")]
    Config { line: usize, message: String },

    #[error("replication failed (n = {n}, rep = {rep}, seed = {seed}): {source}")]
    Replication {
        n: usize,
        rep: usize,
        seed: u64,
        #[source]
        source: Box<FglmError>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl FglmError {
    /// True for errors caused by bad input rather than a failure while computing.
    pub fn is_validation(&self) -> bool {
        match self {
            FglmError::InvalidParameter(_)
            | FglmError::DimensionMismatch { .. }
            | FglmError::NotSymmetric(_)
            | FglmError::SampleTooSmall { .. }
            | FglmError::Config { .. } => true,
            FglmError::Replication { source, .. } => source.is_validation(),
            FglmError::Divergence { .. } | FglmError::Numerical(_) | FglmError::Io(_) => false,
        }
    }
}

pub type Result<T> = std::result::Result<T, FglmError>;

pub(crate) fn invalid(msg: impl Into<String>) -> FglmError {
    FglmError::InvalidParameter(msg.into())
}
