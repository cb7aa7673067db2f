use thiserror::Error;

#[derive(Debug, Error)]
pub enum AdError {
    #[error("shape mismatch in {op}: {detail}")]
    ShapeMismatch { op: &'static str, detail: String },
    #[error("{op} produced a non-finite value")]
    NonFinite { op: &'static str },
    #[error("backward requires a scalar output, got shape {0:?}")]
    NonScalarOutput(Vec<usize>),
    #[error("cotangent shape {got:?} does not match node shape {expected:?}")]
    CotangentShape { got: Vec<usize>, expected: Vec<usize> },
    #[error("NaN in gradients for parameter `{0}`")]
    NanGradient(String),
    #[error("invalid tensor: shape {shape:?} holds {len} values")]
    InvalidTensor { shape: Vec<usize>, len: usize },
    #[error("checkpoint io: {0}")]
    Io(#[from] std::io::Error),
    #[error("bad checkpoint: {0}")]
    BadCheckpoint(String),
    #[error("parameter `{0}` not found")]
    UnknownParameter(String),
    #[error("gradient count {got} does not match parameter count {expected}")]
    GradientCount { got: usize, expected: usize },
}

pub type Result<T> = std::result::Result<T, AdError>;
