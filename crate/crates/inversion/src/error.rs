//! Error type for the inversion loop.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum InversionError {
    #[error("forward model: {0}")]
    Fvm(#[from] lddim_fvm::FvmError),
    #[error("generative prior: {0}")]
    Prior(#[from] lddim_prior::PriorError),
    #[error("autodiff: {0}")]
    Ad(#[from] lddim_autodiff::AdError),
    #[error("metrics: {0}")]
    Metrics(#[from] lddim_metrics::MetricsError),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("invalid observations: {0}")]
    InvalidObservations(String),
    #[error("prior mode {0} needs component {1}")]
    MissingComponent(String, String),
    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
}

pub type Result<T> = std::result::Result<T, InversionError>;
