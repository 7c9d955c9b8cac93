use std::path::PathBuf;

use thiserror::Error;

use crate::ModelTag;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("failed to read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("empty file: no data rows")]
    EmptyData,

    #[error("malformed row {row}: {message}")]
    MalformedRow { row: usize, message: String },

    #[error("area {id}: count r = {r} exceeds population n = {n}")]
    CountExceedsPopulation { id: u32, n: u64, r: u64 },

    #[error("area {id}: population must be at least 1")]
    EmptyPopulation { id: u32 },

    #[error("duplicate area id {0}")]
    DuplicateId(u32),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("quadrature order {0} outside 1..=64")]
    QuadratureOrder(usize),

    #[error("eigenvalue iteration failed to converge")]
    NoConvergence,

    #[error("length mismatch: expected {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },

    #[error("degenerate grid: log-likelihood is -inf at every grid point")]
    DegenerateGrid,

    #[error("model {0} is not available in the aligned draws")]
    MissingModel(ModelTag),

    #[error("model {0} has no among-area distribution for a typical area")]
    NonMarginalModel(ModelTag),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
}

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidParameter(msg.into())
}
