use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum Error {
    #[error("length mismatch: expected {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },

    #[error("seller index {index} out of range for {sellers} sellers")]
    SellerOutOfRange { index: usize, sellers: usize },

    #[error("allocation out of range at item {item}: {count} units requested, {cap} available")]
    AllocationOutOfRange { item: usize, count: u32, cap: u32 },

    #[error("malformed valuation: {0}")]
    MalformedValuation(String),

    #[error("wrong valuation class: {0}")]
    WrongValuationClass(String),

    #[error("search space of {size} candidates exceeds the limit of {limit}")]
    SearchSpaceTooLarge { size: u128, limit: u128 },

    #[error("invalid instance: {0}")]
    InvalidInstance(String),

    #[error("unit {unit} of seller {seller} is not allocated under the given bids")]
    NoThreshold { seller: usize, unit: u32 },

    #[error("invalid rational '{0}'")]
    ParseRational(String),

    #[error("invalid scenario '{0}'")]
    InvalidScenario(String),

    #[error("unknown mechanism '{0}'")]
    UnknownMechanism(String),

    #[error("{path}: {message}")]
    Validation { path: String, message: String },

    #[error("parameter out of range: {0}")]
    OutOfRange(String),

    #[error("rejection sampling gave up after {0} attempts")]
    RetryCapExceeded(usize),
}

impl Error {
    pub(crate) fn validation(path: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Validation {
            path: path.into(),
            message: message.into(),
        }
    }
}
