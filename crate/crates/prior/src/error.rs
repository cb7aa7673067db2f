use thiserror::Error;

#[derive(Debug, Error)]
pub enum PriorError {
    #[error("autodiff error: {0}")]
    Ad(#[from] lddim_autodiff::AdError),
    #[error("field error: {0}")]
    Fvm(#[from] lddim_fvm::FvmError),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("invalid schedule: {0}")]
    Schedule(String),
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("training diverged at epoch {epoch}; last good checkpoint kept at {checkpoint}")]
    TrainingDiverged { epoch: usize, checkpoint: String },
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, PriorError>;
