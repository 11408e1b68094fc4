use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("unsupported space combination: {0}")]
    UnsupportedTag(String),

    #[error("contract violation: {0}")]
    ContractViolation(String),

    #[error("numerical error (dimension {dim}): {reason}")]
    Numerical { dim: usize, reason: String },

    #[error("cutoff did not converge below cap {cap}; probes: {evidence:?}")]
    NonConvergence { cap: usize, evidence: Vec<(usize, f64)> },

    #[error("usage: {0}")]
    Usage(String),

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter { name, reason: reason.into() }
    }

    /// Process exit status for the CLI: usage 2, numerical 3, I/O 4.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::InvalidParameter { .. } | Error::Usage(_) => 2,
            Error::Io { .. } => 4,
            _ => 3,
        }
    }
}
