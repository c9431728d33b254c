use std::path::PathBuf;

use thiserror::Error;

/// Errors produced by the yaw-control toolkit.
#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}: line {line}: {message}")]
    Parse {
        path: PathBuf,
        line: u64,
        message: String,
    },

    #[error("schema error: {0}")]
    Schema(String),

    #[error("value out of range: {0}")]
    Range(String),

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("non-finite value: {0}")]
    Domain(String),

    #[error("invalid state: {0}")]
    State(String),

    #[error("length mismatch: {0}")]
    LengthMismatch(String),

    #[error("alignment error: {0}")]
    Alignment(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
