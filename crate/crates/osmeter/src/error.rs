//! Error types shared across the pipeline.

use std::path::PathBuf;
use thiserror::Error;

/// Top-level error for all pipeline stages.
#[derive(Debug, Error)]
pub enum Error {
    #[error("config error: {0}")]
    Config(String),

    #[error("parse error at byte {offset}: {message}")]
    Parse { offset: usize, message: String },

    #[error("record rejected: {0}")]
    Rejected(String),

    #[error("data integrity: {0}")]
    Integrity(String),

    #[error("provider failure: {0}")]
    Provider(String),

    #[error("schema error: {0}")]
    Schema(String),

    #[error("model spec error: {0}")]
    ModelSpec(String),

    #[error("estimation error: {0}")]
    Estimation(String),

    #[error("numerical error: {0}")]
    Numerical(String),

    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("invalid input: {0}")]
    InvalidInput(String),
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Process exit code for the CLI: 1 config, 2 integrity, 3 provider, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) => 1,
            Error::Integrity(_) => 2,
            Error::Provider(_) => 3,
            _ => 1,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
