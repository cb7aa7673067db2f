use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum SynthError {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("unsupported Matern smoothness nu = {0}, only nu = 1 is implemented")]
    UnsupportedNu(f64),
    #[error("degenerate field: {0}")]
    DegenerateField(String),
    #[error("field error: {0}")]
    Fvm(#[from] lddim_fvm::FvmError),
    #[error("io error at {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("bad manifest: {0}")]
    BadManifest(String),
}

pub type Result<T> = std::result::Result<T, SynthError>;
