use thiserror::Error;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("i/o error: {0}")]
    Io(String),
    #[error("output error: {0}")]
    Output(String),
    #[error(transparent)]
    Core(#[from] loci_core::Error),
}

pub type Result<T, E = HarnessError> = std::result::Result<T, E>;
