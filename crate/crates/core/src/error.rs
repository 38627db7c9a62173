use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Scanner failure with the byte offset where it was detected.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{path}:{offset}: {message}")]
pub struct ScanError {
    pub path: String,
    pub offset: usize,
    pub message: String,
}

#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Scan(#[from] ScanError),

    #[error("gene length mismatch: expected {expected} bits, got {actual}")]
    LengthMismatch { expected: usize, actual: usize },

    #[error("call site {site} overlaps an earlier substitution")]
    SpanConflict { site: usize },

    #[error("call site {site} does not belong to this source unit")]
    SiteMismatch { site: usize },

    #[error("cannot draw {population} distinct patterns from gene length {gene_length}")]
    InfeasibleDistinct { gene_length: usize, population: usize },

    #[error("invalid GA parameters: {0}")]
    GaParams(String),

    #[error("baseline measurement failed on {device}: {reason}")]
    BaselineFailure { device: String, reason: String },

    #[error("no devices configured")]
    NoDevices,

    #[error("evaluator infrastructure failure: {0}")]
    Infrastructure(String),

    #[error("profile {path}: line {line}: {message}")]
    Profile {
        path: String,
        line: usize,
        message: String,
    },

    #[error("registry {path}: {message}")]
    Registry { path: String, message: String },

    #[error("invalid configuration:\n  - {}", .0.join("\n  - "))]
    Config(Vec<String>),

    #[error("report: {0}")]
    Report(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
