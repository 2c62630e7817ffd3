//! Error type shared by every module.

use std::path::PathBuf;

/// Result alias used throughout the crate.
pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// A parameter violates an operation's preconditions.
    #[error("invalid parameter: {0}")]
    Parameter(String),

    /// The input carries no usable information (all-zero energy, too few paths, ...).
    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("malformed WAV header in {path}: {reason}")]
    MalformedWav { path: PathBuf, reason: String },

    #[error("unsupported audio codec in {path}: {reason}")]
    UnsupportedCodec { path: PathBuf, reason: String },

    #[error("malformed tensor file {path}: {reason}")]
    MalformedTensor { path: PathBuf, reason: String },

    #[error("invalid JSON in {path}: {source}")]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },
}

impl Error {
    pub(crate) fn param(msg: impl Into<String>) -> Self {
        Error::Parameter(msg.into())
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Process exit code: 2 for parameter errors, 3 for anything touching files.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Parameter(_) | Error::Degenerate(_) => 2,
            _ => 3,
        }
    }
}
