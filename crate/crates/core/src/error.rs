use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("basis {name} expects {expected} arguments, got {got}")]
    Arity {
        name: &'static str,
        expected: usize,
        got: usize,
    },

    #[error("unknown basis function `{0}`")]
    UnknownBasis(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("parse error at offset {offset}: {message}")]
    Parse { offset: usize, message: String },

    #[error("{path}: {message}")]
    Load { path: PathBuf, message: String },

    #[error("{path}: bad magic number {found}, expected {expected}")]
    Magic {
        path: PathBuf,
        found: u32,
        expected: u32,
    },

    #[error("{path}: payload truncated, expected {expected} bytes, found {found}")]
    Truncated {
        path: PathBuf,
        expected: usize,
        found: usize,
    },

    #[error("image file has {images} entries but label file has {labels}")]
    CountMismatch { images: usize, labels: usize },

    #[error("contract violation: {0}")]
    Contract(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    pub fn load(path: impl Into<PathBuf>, msg: impl Into<String>) -> Self {
        Error::Load {
            path: path.into(),
            message: msg.into(),
        }
    }

    /// Validation errors (bad input before any work started) versus runtime failures.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            Error::Config(_) | Error::UnknownBasis(_) | Error::Parse { .. } | Error::Arity { .. }
        )
    }
}
