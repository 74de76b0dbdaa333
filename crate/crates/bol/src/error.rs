//! CLI errors and the exit-code contract.

use std::fmt;

use bol_core::Error as CoreError;

/// `0` pass, `1` failed assertion, `2` usage, `3` bad spec or parameter,
/// `4` conflicting flags, `5` resource guard.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CliError {
    Failed(String),
    Usage(String),
    Invalid(String),
    Conflict(String),
    Guard(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Failed(_) => 1,
            CliError::Usage(_) => 2,
            CliError::Invalid(_) => 3,
            CliError::Conflict(_) => 4,
            CliError::Guard(_) => 5,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Failed(m) => write!(f, "assertion failed: {m}"),
            CliError::Usage(m) => write!(f, "usage: {m}"),
            CliError::Invalid(m) => write!(f, "invalid input: {m}"),
            CliError::Conflict(m) => write!(f, "conflicting options: {m}"),
            CliError::Guard(m) => write!(f, "resource guard: {m}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<CoreError> for CliError {
    fn from(e: CoreError) -> Self {
        match e {
            CoreError::ResourceGuard { guard, detail } => {
                CliError::Guard(format!("{guard}: {detail}"))
            }
            CoreError::Divergence { .. } | CoreError::NoConvergence { .. } => {
                CliError::Failed(e.to_string())
            }
            _ => CliError::Invalid(e.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Invalid(format!("io: {e}"))
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Invalid(format!("json: {e}"))
    }
}

pub type CliResult<T> = Result<T, CliError>;
