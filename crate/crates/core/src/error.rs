use thiserror::Error;

use crate::exactmath::ExactVector;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("parse error on line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("clause {clause} contains both x{variable} and its negation")]
    Tautology { clause: usize, variable: usize },

    #[error("invalid formula: {0}")]
    InvalidFormula(String),

    #[error("{what} has {size} variables, exhaustive limit is {limit}")]
    TooLarge {
        what: &'static str,
        size: usize,
        limit: usize,
    },

    #[error("clause {clause}: {reason}")]
    Width { clause: usize, reason: String },

    /// Columns are linearly dependent. `kernel` is a nonzero integer vector with
    /// `B * kernel = 0`; its support names the offending columns.
    #[error("matrix columns are linearly dependent (kernel vector {kernel})")]
    RankDeficient { kernel: ExactVector },

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("enumeration exceeded the node budget of {limit}")]
    BudgetExceeded { limit: u64 },

    #[error("lattice rank {rank} exceeds the solver limit {limit}")]
    RankTooLarge { rank: usize, limit: usize },

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn parse(line: usize, message: impl Into<String>) -> Self {
        Error::Parse {
            line,
            message: message.into(),
        }
    }
}
