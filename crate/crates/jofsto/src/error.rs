//! Crate-wide error type.
//!
//! Shape violations on user-supplied data are `ShapeMismatch`, bad settings
//! are `Config`, and a training run that produces non-finite numbers aborts
//! with `TrainingAbort` carrying enough context to locate the batch.

use thiserror::Error;

#[derive(Error, Debug)]
pub enum Error {
    #[error("shape mismatch in {context}: expected {expected}, got {actual}")]
    ShapeMismatch {
        context: &'static str,
        expected: String,
        actual: String,
    },

    #[error("configuration error: {0}")]
    Config(String),

    #[error("training aborted at step {step}, epoch {epoch}, batch {batch}: {detail}")]
    TrainingAbort {
        step: usize,
        epoch: usize,
        batch: usize,
        detail: String,
    },

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("malformed file {path} at byte {offset}: {detail}")]
    Format {
        path: String,
        offset: u64,
        detail: String,
    },

    #[error("checksum mismatch in {path}: stored {stored:#018x}, computed {computed:#018x}")]
    Checksum {
        path: String,
        stored: u64,
        computed: u64,
    },

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn shape(context: &'static str, expected: impl ToString, actual: impl ToString) -> Self {
        Error::ShapeMismatch {
            context,
            expected: expected.to_string(),
            actual: actual.to_string(),
        }
    }

    pub fn config(msg: impl ToString) -> Self {
        Error::Config(msg.to_string())
    }

    /// Process exit code for the CLI: 1 for configuration problems,
    /// 2 for runtime aborts.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) | Error::ShapeMismatch { .. } => 1,
            _ => 2,
        }
    }
}
