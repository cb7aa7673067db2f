//! Error type for metric evaluation.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum MetricsError {
    #[error("grid mismatch: {0}")]
    GridMismatch(String),
    #[error("degenerate input: {0}")]
    Degenerate(String),
    #[error("invalid parameter: {0}")]
    InvalidParams(String),
    #[error("covariance square root failed: eigenvalue {0} below tolerance")]
    IndefiniteCovariance(f64),
}

pub type Result<T> = std::result::Result<T, MetricsError>;
