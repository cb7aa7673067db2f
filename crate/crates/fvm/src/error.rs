use thiserror::Error;

#[derive(Debug, Error)]
pub enum FvmError {
    #[error("invalid field: {0}")]
    InvalidField(String),
    #[error("conductivity must be strictly positive (cell {cell} holds {value})")]
    NonPositiveConductivity { cell: usize, value: f64 },
    #[error("degenerate grid: nx={nx}, ny={ny} (need at least 2x2)")]
    DegenerateGrid { nx: usize, ny: usize },
    #[error("grid mismatch: {0}")]
    GridMismatch(String),
    #[error("linear solve failed: relative residual {residual:.3e} exceeds {tol:.1e}")]
    SolveFailed { residual: f64, tol: f64 },
    #[error("matrix is not positive definite at row {0}")]
    NotPositiveDefinite(usize),
    #[error("field io: {0}")]
    Io(#[from] std::io::Error),
    #[error("bad field file: {0}")]
    BadFieldFile(String),
}

pub type Result<T> = std::result::Result<T, FvmError>;
