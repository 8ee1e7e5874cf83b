//! Command-line surface: JSON model/graph/scenario documents, the four
//! subcommands, and machine-readable result files.

pub mod commands;
pub mod docs;
pub mod output;
pub mod verify;

use thiserror::Error;

/// Exit-code contract: 0 success, 1 input error, 2 numeric or feasibility
/// failure.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Input(String),
    #[error("{0}")]
    Numeric(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Input(_) => 1,
            CliError::Numeric(_) => 2,
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Input(format!("i/o error: {e}"))
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Input(format!("json error: {e}"))
    }
}

impl From<crate::decompose::DecomposeError> for CliError {
    fn from(e: crate::decompose::DecomposeError) -> Self {
        use crate::decompose::DecomposeError::*;
        match &e {
            DimensionMismatch(_) | InvalidModel(_) => CliError::Input(e.to_string()),
            _ => CliError::Numeric(e.to_string()),
        }
    }
}

impl From<crate::protocol::ProtocolError> for CliError {
    fn from(e: crate::protocol::ProtocolError) -> Self {
        use crate::protocol::ProtocolError::*;
        match &e {
            DimensionMismatch(_) | InvalidArgument(_) | NegativeWeight { .. } => {
                CliError::Input(e.to_string())
            }
            _ => CliError::Numeric(e.to_string()),
        }
    }
}

impl From<crate::sim::SimError> for CliError {
    fn from(e: crate::sim::SimError) -> Self {
        use crate::sim::SimError::*;
        match &e {
            DimensionMismatch(_) | InvalidScenario(_) => CliError::Input(e.to_string()),
            _ => CliError::Numeric(e.to_string()),
        }
    }
}

impl From<crate::matlib::MatError> for CliError {
    fn from(e: crate::matlib::MatError) -> Self {
        use crate::matlib::MatError::*;
        match &e {
            DimensionMismatch(_) | InvalidArgument(_) | NonFinite => CliError::Input(e.to_string()),
            _ => CliError::Numeric(e.to_string()),
        }
    }
}

/// Residual tolerance override from the `SPATS_TOL` environment variable.
pub fn tolerance_from_env() -> Result<Option<f64>, CliError> {
    match std::env::var("SPATS_TOL") {
        Ok(raw) => {
            let value: f64 = raw
                .trim()
                .parse()
                .map_err(|_| CliError::Input(format!("SPATS_TOL is not a number: {raw:?}")))?;
            if value <= 0.0 {
                return Err(CliError::Input("SPATS_TOL must be positive".into()));
            }
            Ok(Some(value))
        }
        Err(_) => Ok(None),
    }
}
