use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("out of domain: {0}")]
    OutOfDomain(String),

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("parse error at byte {offset}: {message}")]
    Parse { offset: usize, message: String },

    #[error("missing frame input at index {index}: {path}")]
    MissingFrame { index: usize, path: PathBuf },

    #[error("config error: {0}")]
    Config(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub fn parse(offset: usize, message: impl Into<String>) -> Self {
        Error::Parse {
            offset,
            message: message.into(),
        }
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Short machine-parsable kind tag, used by the CLI's one-line errors.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::InvalidInput(_) => "invalid-input",
            Error::OutOfDomain(_) => "out-of-domain",
            Error::ShapeMismatch(_) => "shape-mismatch",
            Error::Parse { .. } => "parse",
            Error::MissingFrame { .. } => "missing-frame",
            Error::Config(_) => "config",
            Error::Io { .. } => "io",
        }
    }
}
