use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum OwcError {
    #[error("domain error: {what} = {value} is outside the valid range")]
    Domain { what: &'static str, value: f64 },

    #[error("invalid parameter: {0}")]
    InvalidParam(String),

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("scene error: {0}")]
    Scene(String),

    #[error("malformed {kind} in {path}: {message}")]
    Format {
        kind: &'static str,
        path: PathBuf,
        message: String,
    },

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("predictions missing for sample ids {0:?}")]
    MissingPredictions(Vec<u64>),

    #[error("config error: {0}")]
    Config(String),
}

impl OwcError {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        OwcError::Io {
            path: path.into(),
            source,
        }
    }

    /// Process exit status for this error: 2 for bad configuration or
    /// parameters, 3 for I/O and malformed files, 4 for missing predictions.
    pub fn exit_code(&self) -> i32 {
        match self {
            OwcError::Io { .. } | OwcError::Format { .. } => 3,
            OwcError::MissingPredictions(_) => 4,
            _ => 2,
        }
    }

    pub(crate) fn domain(what: &'static str, value: f64) -> Self {
        OwcError::Domain { what, value }
    }
}

pub type Result<T> = std::result::Result<T, OwcError>;
