use std::io;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("parse error on line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("line {line}: node id {id} out of range for n = {n}")]
    NodeRange { line: usize, id: u64, n: usize },

    #[error("node id {id} out of range for n = {n}")]
    OutOfRange { id: u64, n: usize },

    #[error("line {line}: invalid weight {weight}")]
    WeightValue { line: usize, weight: f64 },

    #[error("bad binary graph: {0}")]
    Format(String),

    #[error("invalid argument: {0}")]
    Argument(String),

    #[error("graph is not valid for the LT model: {0}")]
    Model(String),

    #[error("instance too large for exhaustive evaluation: {0}")]
    Size(String),

    #[error(transparent)]
    Io(#[from] io::Error),
}

impl Error {
    pub(crate) fn arg(msg: impl Into<String>) -> Self {
        Error::Argument(msg.into())
    }
}
