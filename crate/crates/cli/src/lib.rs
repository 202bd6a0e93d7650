//! IO and file formats for the keep-alive policy harness: arrival CSVs,
//! production-trace loading, dataset caching as JSON, synthetic dataset
//! specs, and a small thread fan-out helper.
//!
//! All pipeline stages compose through files; timestamps are serialized as
//! decimal minutes with 17 significant digits so piped stages round-trip
//! without precision loss.

pub mod azure;
pub mod dataset;
pub mod io;
pub mod parallel;
pub mod synth;

use std::fmt;
use std::process::ExitCode;

use keepalive_core::Error as CoreError;

/// Harness-level error carrying the process exit code: 2 for configuration
/// problems, 3 for data problems, 4 for numeric failures.
#[derive(Debug)]
pub enum CliError {
    Config(String),
    Data(String),
    Numeric(String),
}

impl CliError {
    pub fn exit_code(&self) -> ExitCode {
        match self {
            CliError::Config(_) => ExitCode::from(2),
            CliError::Data(_) => ExitCode::from(3),
            CliError::Numeric(_) => ExitCode::from(4),
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(msg) => write!(f, "config error: {msg}"),
            CliError::Data(msg) => write!(f, "data error: {msg}"),
            CliError::Numeric(msg) => write!(f, "numeric error: {msg}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<CoreError> for CliError {
    fn from(err: CoreError) -> Self {
        match &err {
            CoreError::Domain(_) | CoreError::Config(_) => CliError::Config(err.to_string()),
            CoreError::InsufficientData { .. } => CliError::Data(err.to_string()),
            CoreError::CapExceeded { .. } | CoreError::FitFailed(_) | CoreError::Numeric(_) => {
                CliError::Numeric(err.to_string())
            }
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;
