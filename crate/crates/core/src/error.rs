use std::path::PathBuf;

use thiserror::Error;

/// Errors produced by the motif mining and forecasting pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("failed to read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {message}")]
    Csv { path: PathBuf, message: String },

    #[error("row {row}, column '{column}': cannot parse '{value}' as a finite number")]
    Parse { row: usize, column: String, value: String },

    #[error("row {row}: timestamp '{value}' {reason}")]
    Timestamp { row: usize, value: String, reason: String },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("channel {channel} has zero variance")]
    ZeroVariance { channel: usize },

    #[error("split '{part}' would be empty")]
    EmptySplit { part: &'static str },

    #[error("non-finite value encountered: {0}")]
    NonFinite(String),

    #[error("training diverged in phase {phase} at step {step}: loss = {loss}")]
    Divergence { phase: u8, step: usize, loss: f64 },

    #[error("serialization error: {0}")]
    Serialization(String),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }

    /// True for failures caused by numerical breakdown rather than bad input.
    pub fn is_numeric(&self) -> bool {
        matches!(self, Error::NonFinite(_) | Error::Divergence { .. })
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Serialization(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
