use std::path::PathBuf;

use thiserror::Error;

/// Errors raised by the library. The CLI maps each variant onto an exit code
/// through [`Error::exit_code`].
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid feature space: {0}")]
    InvalidSpace(String),

    #[error("invalid causal function: {0}")]
    InvalidFunction(String),

    #[error("parse error at byte {pos}: {msg}")]
    Parse { pos: usize, msg: String },

    #[error("invalid parameter `{name}`: {msg}")]
    InvalidParam { name: &'static str, msg: String },

    #[error("enumeration would produce more than {limit} hypotheses")]
    EnumerationOverflow { limit: usize },

    #[error("no enumerated causal function is consistent with observations {members:?}")]
    NoConsistentFunction { members: Vec<usize> },

    #[error("schema violation in {field}: {msg}")]
    Schema { field: String, msg: String },

    #[error("record {row}: {msg}")]
    Record { row: usize, msg: String },

    #[error("grid budget exhausted after {evaluated} of {total} cells")]
    BudgetExhausted { evaluated: usize, total: usize },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn schema(field: impl Into<String>, msg: impl Into<String>) -> Self {
        Error::Schema {
            field: field.into(),
            msg: msg.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// 0 success, 2 validation, 3 inference failure, 4 budget exhausted.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::NoConsistentFunction { .. } => 3,
            Error::BudgetExhausted { .. } => 4,
            _ => 2,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
