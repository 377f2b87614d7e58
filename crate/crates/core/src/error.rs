use std::io;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// A precondition on the data was violated (zero enrollment, empty partition, ...).
    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("missing required column for `{field}`; tried: {}", candidates.join(", "))]
    MissingColumn {
        field: &'static str,
        candidates: Vec<String>,
    },

    #[error("cost index has no entry for ({state}, {year})")]
    MissingCostIndex { state: String, year: i32 },

    #[error("dollar normalization already applied (index `{0}`)")]
    AlreadyNormalized(String),

    #[error("sample is not dollar-normalized")]
    NotNormalized,

    #[error("insufficient data: need {needed}, got {got}")]
    InsufficientData { needed: usize, got: usize },

    #[error("dominance predicate is not monotone in beta near {beta}")]
    NonMonotone { beta: f64 },

    #[error("could not bracket beta: {0}")]
    Bracket(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// True for errors caused by bad configuration rather than bad data.
    pub fn is_config(&self) -> bool {
        matches!(
            self,
            Error::InvalidParameter(_)
                | Error::MissingColumn { .. }
                | Error::MissingCostIndex { .. }
        )
    }
}
