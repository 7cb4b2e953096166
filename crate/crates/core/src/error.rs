use thiserror::Error;

/// Errors raised by the geometry, likelihood, optimizer, and I/O layers.
#[derive(Debug, Error)]
pub enum GmmError {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("matrix is not symmetric positive definite: {0}")]
    NotSpd(String),

    #[error("numerical breakdown: {0}")]
    NumericalBreakdown(String),

    #[error("non-finite log-likelihood at sample {sample}")]
    NonFiniteSample { sample: usize },

    #[error("component {component} collapsed (effective count {count:.3e})")]
    DegenerateComponent { component: usize, count: f64 },

    #[error("mixture generation failed after {attempts} attempts; try a smaller c*sqrt(d)")]
    GenerationFailure { attempts: usize },

    #[error("parse error at row {row}, column {column}: {message}")]
    Parse {
        row: usize,
        column: usize,
        message: String,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, GmmError>;

pub(crate) fn check_dim(expected: usize, got: usize) -> Result<()> {
    if expected == got {
        Ok(())
    } else {
        Err(GmmError::DimensionMismatch { expected, got })
    }
}
