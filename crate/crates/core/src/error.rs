use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("design of {points} points exceeds the size cap of {cap}")]
    SizeLimit { points: u128, cap: usize },
    #[error("infeasible: {0}")]
    Infeasible(String),
    #[error("empty input: {0}")]
    Empty(&'static str),
    #[error("model does not provide {0}")]
    Unsupported(&'static str),
    #[error("non-finite value: {0}")]
    NonFinite(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
