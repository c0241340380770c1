use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("shape undefined for fewer than two values")]
    ShapeTooShort,

    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("input index {index} out of range for arity {arity}")]
    InvalidIndex { index: usize, arity: usize },

    #[error("arity mismatch: model expects {expected} inputs, got {actual}")]
    ArityMismatch { expected: usize, actual: usize },

    #[error("dataset has no patterns")]
    EmptyDataset,

    #[error("need at least {needed} patterns, dataset has {actual}")]
    NotEnoughPatterns { needed: usize, actual: usize },

    #[error("input arity {arity} exceeds exhaustive cap {cap}; use the greedy search")]
    TooManyInputs { arity: usize, cap: usize },

    #[error("invalid partition: {0}")]
    InvalidPartition(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("diverged; reduce learning rate")]
    Diverged,

    #[error("csv: {0}")]
    Csv(String),

    #[error("io: {0}")]
    Io(String),
}

impl Error {
    /// True for errors caused by the data rather than the numerics or the caller's flags.
    pub fn is_data_error(&self) -> bool {
        matches!(
            self,
            Error::EmptyDataset
                | Error::NotEnoughPatterns { .. }
                | Error::Csv(_)
                | Error::Io(_)
                | Error::NonFinite(_)
                | Error::ShapeTooShort
                | Error::ArityMismatch { .. }
        )
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
