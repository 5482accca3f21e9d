use std::path::PathBuf;

use thiserror::Error;

/// Errors produced anywhere in the pipeline.
///
/// Variants are grouped by the CLI exit code they map to: configuration
/// problems exit with 1, data/format problems with 2, broken internal
/// invariants with 3.
#[derive(Debug, Error)]
pub enum Error {
    #[error("signal shorter than one analysis window ({len} < {window} samples)")]
    EmptySignal { len: usize, window: usize },

    #[error("sequence too short: need at least {needed} frames, got {got}")]
    TooShort { needed: usize, got: usize },

    #[error("sequence of {got} frames is shorter than the segment length {needed}")]
    TooShortForSegment { needed: usize, got: usize },

    #[error("no segments could be formed")]
    EmptySegmentSet,

    #[error("format error in {path}: {msg}")]
    Format { path: PathBuf, msg: String },

    #[error("data error: {0}")]
    Data(String),

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("invalid state: {0}")]
    State(String),

    #[error("expected {expected} votes, got {got}")]
    Arity { expected: usize, got: usize },

    #[error("configuration error: {0}")]
    Config(String),

    #[error("montage error: {0}")]
    Montage(String),

    #[error("no data: {0}")]
    NoData(String),

    #[error("insufficient data: need at least {needed}, got {got}")]
    InsufficientData { needed: usize, got: usize },

    #[error("invariant violated: {0}")]
    InvariantViolation(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {source}")]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }

    pub fn json(path: impl Into<PathBuf>, source: serde_json::Error) -> Self {
        Error::Json { path: path.into(), source }
    }

    pub fn format(path: impl Into<PathBuf>, msg: impl Into<String>) -> Self {
        Error::Format { path: path.into(), msg: msg.into() }
    }

    /// Process exit code used by the command-line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) => 1,
            Error::InvariantViolation(_) | Error::State(_) => 3,
            _ => 2,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
