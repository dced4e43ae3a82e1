use thiserror::Error;

/// Errors produced anywhere in the toolkit.
#[derive(Debug, Error)]
pub enum DeupError {
    /// A configuration file could not be parsed.
    #[error("config schema error at line {line}, key `{key}`: {message}")]
    Schema {
        key: String,
        line: usize,
        message: String,
    },
    /// A parsed value violates an invariant.
    #[error("validation error: {0}")]
    Validation(String),
    #[error("invalid argument: {0}")]
    Argument(String),
    /// Linear algebra failure (e.g. Cholesky after maximal jitter).
    #[error("numeric error: {0}")]
    Numeric(String),
    #[error("training diverged at epoch {epoch} (loss = {loss})")]
    TrainingDiverged { epoch: usize, loss: f64 },
    /// Feature context was fitted on a different dataset than the one queried.
    #[error("stale feature context: fitted on {fitted} examples (fingerprint {fitted_fp:#x}), queried with {queried} (fingerprint {queried_fp:#x})")]
    StaleContext {
        fitted: usize,
        fitted_fp: u64,
        queried: usize,
        queried_fp: u64,
    },
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("serialization error: {0}")]
    Serialization(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, DeupError>;

pub(crate) fn argument(msg: impl Into<String>) -> DeupError {
    DeupError::Argument(msg.into())
}
