use std::io;

use thiserror::Error;

use crate::optim::TraceRecord;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("hermitian symmetry violated: imaginary residue {residue:e} exceeds {limit:e}")]
    Symmetry { residue: f64, limit: f64 },

    #[error("size mismatch: expected {expected} values, got {got}")]
    SizeMismatch { expected: usize, got: usize },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("numeric error: {0}")]
    Numeric(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("malformed snapshot: {0}")]
    Format(String),

    #[error("solver diverged at iteration {iter}")]
    Diverged { iter: u64, trace: Vec<TraceRecord> },

    #[error(transparent)]
    Io(#[from] io::Error),
}

impl Error {
    /// Process exit status used by the command-line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Diverged { .. } => 3,
            Error::Config(_)
            | Error::Format(_)
            | Error::DimensionMismatch(_)
            | Error::SizeMismatch { .. }
            | Error::InvalidArgument(_)
            | Error::Io(_) => 2,
            Error::Symmetry { .. } | Error::Numeric(_) => 1,
        }
    }
}
