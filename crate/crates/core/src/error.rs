use thiserror::Error;

/// Errors produced by the library and surfaced by the CLI.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("dimension mismatch: expected {expected}, got {got} ({context})")]
    DimensionMismatch {
        expected: usize,
        got: usize,
        context: &'static str,
    },

    #[error("degenerate kernel matrix: lambda_min = {lambda_min:e}, lambda_max = {lambda_max:e}")]
    DegenerateKernel { lambda_min: f64, lambda_max: f64 },

    #[error("feature matrix is rank deficient: smallest singular value {sigma_min:e}")]
    RankDeficient { sigma_min: f64 },

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("index {index} out of range for {len} columns")]
    IndexOutOfRange { index: usize, len: usize },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn param(msg: impl Into<String>) -> Self {
        Error::Parameter(msg.into())
    }

    /// True for errors caused by bad user input rather than numerical state or IO.
    pub fn is_parameter_error(&self) -> bool {
        matches!(
            self,
            Error::Parameter(_) | Error::DimensionMismatch { .. } | Error::IndexOutOfRange { .. }
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
