use std::path::PathBuf;

use crate::model::ConsumerId;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid bid: {0}")]
    InvalidBid(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("invalid value: {0}")]
    InvalidValue(String),

    #[error("no repository record for consumer {0}")]
    MissingRecord(ConsumerId),

    #[error("consumer {0} has dropped out and cannot bid")]
    DroppedBidder(ConsumerId),

    #[error("allocation violates {} constraint(s): {}", .0.len(), .0.join("; "))]
    InvalidAllocation(Vec<String>),

    #[error("incompatible prices: consumer offers {consumer} below provider ask {provider}")]
    IncompatiblePrices { consumer: String, provider: String },

    #[error("instance too large for exhaustive search: {0}")]
    OracleTooLarge(String),

    #[error("invalid solver limits: {0}")]
    InvalidLimits(String),

    #[error("participant set is empty")]
    EmptyParticipants,

    #[error("no units offered by any provider")]
    NothingOffered,

    #[error("round mismatch: repository expects round {expected}, result is for round {got}")]
    RoundMismatch { expected: u32, got: u32 },

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),

    #[error("report inconsistency: {0}")]
    ReportMismatch(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }
}
