use loci_harness::HarnessError;
use thiserror::Error;

/// Failure classes with distinct process exit codes.
#[derive(Debug, Error)]
pub enum CliError {
    /// Unreadable or malformed input, invalid flags or settings.
    #[error("input error: {0}")]
    Input(String),
    /// The try design or null neighborhood is empty.
    #[error("infeasible: {0}")]
    Infeasible(String),
    /// Optimizer or arithmetic failure, or an output write error.
    #[error("numerical failure: {0}")]
    Numeric(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Input(_) => 2,
            CliError::Infeasible(_) => 3,
            CliError::Numeric(_) => 4,
        }
    }
}

impl From<loci_core::Error> for CliError {
    fn from(e: loci_core::Error) -> Self {
        use loci_core::Error as E;
        match e {
            E::Infeasible(_) => CliError::Infeasible(e.to_string()),
            E::NonFinite(_) | E::Numerical(_) => CliError::Numeric(e.to_string()),
            _ => CliError::Input(e.to_string()),
        }
    }
}

impl From<HarnessError> for CliError {
    fn from(e: HarnessError) -> Self {
        match e {
            HarnessError::Config(_) | HarnessError::Io(_) => CliError::Input(e.to_string()),
            HarnessError::Output(_) => CliError::Numeric(e.to_string()),
            HarnessError::Core(c) => c.into(),
        }
    }
}

pub type Result<T, E = CliError> = std::result::Result<T, E>;
