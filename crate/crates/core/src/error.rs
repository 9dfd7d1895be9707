use thiserror::Error;

/// Errors shared by all modules of the crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("ground size {0} out of range (expected 1..={1})")]
    GroundSize(usize, usize),

    #[error("invalid partition: {0}")]
    InvalidPartition(String),

    #[error("ground sizes incompatible: {0} vs {1}")]
    GroundMismatch(usize, usize),

    #[error("partition must be noncrossing for this operation")]
    CrossingNotAllowed,

    #[error("invalid ground subset: {0}")]
    InvalidSubset(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("dimension mismatch: {0}")]
    DimMismatch(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("unknown symbol id {0}")]
    UnknownSymbol(usize),

    #[error("word too long: length {0} exceeds supported maximum {1}")]
    WordTooLong(usize, usize),

    #[error("verification failed [{lemma}]: {detail}")]
    Lemma { lemma: String, detail: String },
}

pub type Result<T> = std::result::Result<T, Error>;
