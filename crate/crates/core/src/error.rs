use thiserror::Error;

use crate::syntax::ParseError;

#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Parse(#[from] ParseError),
    /// An exploration or canonicalization bound was exceeded.
    #[error("capacity exceeded: {0}")]
    Capacity(String),
    #[error("ill-formed configuration: {0}")]
    IllFormed(String),
    #[error("invalid argument: {0}")]
    Invalid(String),
}

pub type Result<T> = std::result::Result<T, Error>;
