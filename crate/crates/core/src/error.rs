use std::path::PathBuf;

use crate::backend::BackendError;
use crate::graph::ExecError;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    InvalidConfiguration(String),

    #[error("config error at line {line}, column {column}: {message}")]
    Config {
        line: usize,
        column: usize,
        message: String,
    },

    #[error(transparent)]
    Execution(#[from] ExecError),

    #[error(transparent)]
    Backend(#[from] BackendError),

    #[error("malformed answer: {0}")]
    MalformedAnswer(String),

    #[error("malformed instance file: {0}")]
    MalformedInstance(String),

    #[error("{failed} of {total} trials failed, above the allowed fraction")]
    TooManyFailures { failed: usize, total: usize },

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidConfiguration(msg.into())
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// True when the error originates from an LLM backend (transport, HTTP
    /// status) rather than from configuration.
    pub fn is_backend(&self) -> bool {
        match self {
            Error::Backend(_) => true,
            Error::Execution(e) => e.is_backend(),
            _ => false,
        }
    }
}
