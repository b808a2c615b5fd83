//! Command-line front end and session server for `fixplan-core`.

pub mod bench;
pub mod commands;
pub mod server;
pub mod session;

use std::fmt;

use fixplan_core::{PlanError, ValidationErrors};

/// Process exit codes.
pub mod exit {
    pub const OK: u8 = 0;
    pub const VALIDATION: u8 = 1;
    pub const LIMITS: u8 = 2;
    pub const CHECK_FAILED: u8 = 3;
}

/// An error with the exit code it maps to.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CliError {
    pub code: u8,
    pub message: String,
}

impl CliError {
    pub fn validation(message: impl Into<String>) -> Self {
        Self {
            code: exit::VALIDATION,
            message: message.into(),
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl std::error::Error for CliError {}

impl From<PlanError> for CliError {
    fn from(e: PlanError) -> Self {
        let code = match e {
            PlanError::LimitExceeded { .. } => exit::LIMITS,
            _ => exit::VALIDATION,
        };
        Self {
            code,
            message: e.to_string(),
        }
    }
}

impl From<ValidationErrors> for CliError {
    fn from(e: ValidationErrors) -> Self {
        Self::validation(format!("invalid input: {e}"))
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        Self::validation(e.to_string())
    }
}
