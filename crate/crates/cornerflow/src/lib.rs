//! Configuration, scenarios, exports and the command line around
//! `cornerflow-core`.

pub mod config;
pub mod export;
pub mod runner;
pub mod scenario;

/// Errors of the IO layer, each with a process exit code.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("parse error: {0}")]
    Parse(String),
    #[error("gate violated: {0}")]
    Gate(String),
    #[error("audit failure: {0}")]
    Audit(cornerflow_core::Error),
    #[error("solver failure: {0}")]
    Solver(cornerflow_core::Error),
    #[error("io error: {0}")]
    Io(String),
}

impl CliError {
    /// 2 for gates, 3 for hard audit failures, 4 for solver failures, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Gate(_) => 2,
            CliError::Audit(_) => 3,
            CliError::Solver(_) => 4,
            CliError::Parse(_) | CliError::Io(_) => 1,
        }
    }
}

impl From<cornerflow_core::Error> for CliError {
    fn from(e: cornerflow_core::Error) -> Self {
        use cornerflow_core::Error as E;
        match e {
            E::AuditFailure { .. } => CliError::Audit(e),
            E::PressureOutOfRange { gate } => CliError::Gate(gate.into()),
            E::TvTooLarge { .. } | E::InvalidProfile(_) => CliError::Gate(e.to_string()),
            other => CliError::Solver(other),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Io(e.to_string())
    }
}
