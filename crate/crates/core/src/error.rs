use thiserror::Error;

/// Errors produced by the library.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("integer overflow in tropical arithmetic")]
    Overflow,

    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },

    #[error("block count mismatch: {left} vs {right}")]
    BlockCountMismatch { left: usize, right: usize },

    #[error("rank mismatch: expected {expected}, got {found}")]
    RankMismatch { expected: usize, found: usize },

    #[error("invalid rank {rank}: {reason}")]
    InvalidRank { rank: usize, reason: &'static str },

    #[error("index {index} out of range 1..={max}")]
    IndexOutOfRange { index: usize, max: usize },

    #[error("parse error: {0}")]
    Parse(String),

    #[error("exploration cap of {cap} exceeded")]
    CapExceeded { cap: usize },

    #[error("cross-section violated: class of `{word}` has {count} canonical members")]
    CrossSection { word: String, count: usize },

    #[error("input is not in the image of the representation: {0}")]
    NotInImage(String),

    #[error("linear part has rank {rank}, expected {expected}")]
    RankDeficient { rank: usize, expected: usize },

    #[error("malformed input: {0}")]
    Malformed(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
