use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// An argument is outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// An iterative routine did not reach its tolerance.
    #[error("convergence failure: {0}")]
    Convergence(String),

    /// A data set or configuration violates one of its invariants.
    #[error("validation error: {0}")]
    Validation(String),

    #[error("parse error in {path} at line {line}: {message}")]
    Parse {
        path: PathBuf,
        line: u64,
        message: String,
    },

    /// The explicit time step is too large for the scheme to stay monotone.
    #[error(
        "time step {dt} violates the stability bound dt < 1/(U + d + k U^gamma) = {bound}"
    )]
    Stability { dt: f64, bound: f64 },

    #[error("non-finite value produced at time index {i}, population index {j}")]
    NonFinite { i: usize, j: usize },

    /// The a priori bounds of the explicit scheme were violated.
    #[error("bound violation at time index {i}, population index {j}: {message}")]
    BoundViolation { i: usize, j: usize, message: String },

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn validation(msg: impl Into<String>) -> Self {
        Error::Validation(msg.into())
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// True for errors caused by bad inputs rather than numerical trouble.
    pub fn is_input_error(&self) -> bool {
        matches!(
            self,
            Error::Domain(_)
                | Error::Validation(_)
                | Error::Parse { .. }
                | Error::Stability { .. }
                | Error::Io { .. }
                | Error::Json(_)
        )
    }
}
