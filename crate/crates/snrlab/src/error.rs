use std::path::PathBuf;
use thiserror::Error;

/// Crate-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid transform size: {0}")]
    InvalidSize(String),

    #[error("length mismatch: expected {expected}, got {actual}")]
    SizeMismatch { expected: usize, actual: usize },

    #[error("capacity exceeded: {0}")]
    Capacity(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("aggregation error: {0}")]
    Aggregation(String),

    #[error("degenerate scene: {0}")]
    DegenerateScene(String),

    #[error("usage error: {0}")]
    Usage(String),

    #[error("malformed PGM file {path}: {reason}")]
    PgmFormat { path: PathBuf, reason: String },

    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Process exit code for the CLI: 2 usage, 3 capacity, 4 I/O.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Capacity(_) => 3,
            Error::Io(_) | Error::PgmFormat { .. } => 4,
            _ => 2,
        }
    }
}
