use std::path::PathBuf;

use crate::svm::BinarySvm;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// Input violates a documented precondition or invariant.
    #[error("validation error: {0}")]
    Validation(String),

    /// Malformed input text. `line` is 1-based.
    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    /// The dual solver hit its iteration cap. The best iterate is kept for
    /// inspection.
    #[error(
        "solver did not converge after {iterations} pair updates (max KKT violation {max_violation:e})"
    )]
    NotConverged {
        iterations: u64,
        max_violation: f64,
        best: Box<BinarySvm>,
    },

    /// A training failure tagged with the feature it came from.
    #[error("feature {feature}: {source}")]
    Feature {
        feature: usize,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub(crate) fn validation(msg: impl Into<String>) -> Self {
        Error::Validation(msg.into())
    }

    pub(crate) fn parse(line: usize, msg: impl Into<String>) -> Self {
        Error::Parse {
            line,
            message: msg.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Coarse category used for process exit codes.
    pub fn kind(&self) -> ErrorKind {
        match self {
            Error::Validation(_) | Error::Parse { .. } => ErrorKind::Validation,
            Error::Io { .. } => ErrorKind::Io,
            Error::NotConverged { .. } => ErrorKind::Solver,
            Error::Feature { source, .. } => source.kind(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    Validation,
    Io,
    Solver,
}
