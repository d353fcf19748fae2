use std::path::PathBuf;

use thiserror::Error;

/// Errors produced by the library.
///
/// Every variant maps onto a short category string (see [`Error::category`])
/// which the command-line driver prints as `ERROR:<category>:<message>`.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid sparsity: S={sparsity} must satisfy 1 <= S < {len}")]
    InvalidSparsity { sparsity: usize, len: usize },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("dimension mismatch: {context} (expected {expected}, got {actual})")]
    DimensionMismatch {
        context: &'static str,
        expected: usize,
        actual: usize,
    },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("{0}")]
    Usage(String),

    #[error("degenerate Procrustes problem: X E^T has rank {rank} < {required}")]
    DegenerateProcrustes { rank: usize, required: usize },

    #[error("group index {index} out of range for {groups} groups")]
    GroupOutOfRange { index: usize, groups: usize },

    #[error("sizing error: {0}")]
    Sizing(String),

    #[error("empty query set: {0}")]
    EmptyQuerySet(&'static str),

    #[error("plaintext out of range: {0}")]
    PlaintextOutOfRange(String),

    #[error("protocol integrity violation: {0}")]
    ProtocolIntegrity(String),

    #[error("wire format: {0}")]
    Wire(String),

    #[error("parse error in {path} at row {row}, column {column}: {message}")]
    Parse {
        path: PathBuf,
        row: usize,
        column: usize,
        message: String,
    },

    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    /// Machine-parsable category used in CLI error output.
    pub fn category(&self) -> &'static str {
        match self {
            Error::InvalidSparsity { .. } | Error::InvalidInput(_) => "input",
            Error::DimensionMismatch { .. } => "dimension",
            Error::Config(_) | Error::Sizing(_) => "config",
            Error::Usage(_) => "usage",
            Error::DegenerateProcrustes { .. } => "numeric",
            Error::GroupOutOfRange { .. } | Error::EmptyQuerySet(_) => "eval",
            Error::PlaintextOutOfRange(_) | Error::ProtocolIntegrity(_) | Error::Wire(_) => {
                "protocol"
            }
            Error::Parse { .. } => "parse",
            Error::Io { .. } => "io",
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn ensure_dim(context: &'static str, expected: usize, actual: usize) -> Result<()> {
    if expected == actual {
        Ok(())
    } else {
        Err(Error::DimensionMismatch {
            context,
            expected,
            actual,
        })
    }
}
