//! Error types shared across the crate.

use thiserror::Error;

/// Errors produced by operators, factorizations and solvers.
#[derive(Debug, Error)]
pub enum Error {
    /// A vector had the wrong length for the requested operation.
    #[error("dimension mismatch: expected length {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    /// Invalid parameter supplied to a constructor.
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// The initial residual is zero; the current iterate already solves the system.
    #[error("zero initial residual: solution already attained")]
    ZeroResidual,

    /// The factorization hit a (near-)invariant subspace.
    #[error("Golub-Kahan breakdown in the {stage} recurrence at step {step}")]
    Breakdown { stage: &'static str, step: usize },

    /// A projected system was numerically singular or indefinite.
    #[error("degenerate projected system at dimension {k}: {reason}")]
    DegenerateProjection { k: usize, reason: String },

    /// File or format problems in the I/O helpers.
    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    /// Malformed file contents.
    #[error("parse error in {path}: {message}")]
    Parse { path: String, message: String },
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn io(path: impl Into<String>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub fn parse(path: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Parse {
            path: path.into(),
            message: message.into(),
        }
    }
}
