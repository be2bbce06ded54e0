use thiserror::Error;

/// Errors produced by construction, planning and oracle routines.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("resource cap exceeded: {0}")]
    ResourceCap(String),

    #[error("matrix is not Hermitian: max asymmetry {0:.3e}")]
    NotHermitian(f64),

    #[error("eigensolver failed: {0}")]
    Eigensolver(String),

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }
}
