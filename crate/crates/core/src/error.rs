use thiserror::Error;

use crate::Vector;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    /// Two-point curvature probe with coincident points or a vanishing gradient.
    #[error("degenerate curvature probe: {0}")]
    DegenerateProbe(String),

    #[error("linesearch failed after {probes} probes (last alpha {last_alpha:e})")]
    LinesearchFailure { probes: usize, last_alpha: f64 },

    #[error("no convergence within {iterations} iterations (gradient norm {grad_norm:e})")]
    Convergence {
        iterations: usize,
        grad_norm: f64,
        best: Vector,
    },

    #[error("dataset generation failed: {0}")]
    Generation(String),

    #[error("invalid usage: {0}")]
    InvalidUsage(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidArgument(msg.into())
}

pub(crate) fn check_dim(expected: usize, got: usize) -> Result<()> {
    if expected == got {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, got })
    }
}
