use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid probability: {0}")]
    InvalidProbability(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("size mismatch: {left} vs {right} vertices")]
    SizeMismatch { left: usize, right: usize },

    #[error("{what} of size {size} exceeds capacity {limit}")]
    CapacityExceeded {
        what: &'static str,
        size: usize,
        limit: usize,
    },

    #[error("exact automorphism count for n={n} exceeds limit {limit} ({isolated} isolated vertices, so |Aut| >= {isolated}!)")]
    AutomorphismCapacity {
        n: usize,
        limit: usize,
        isolated: usize,
    },

    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn ensure_same_size(left: usize, right: usize) -> Result<()> {
    if left != right {
        return Err(Error::SizeMismatch { left, right });
    }
    Ok(())
}
