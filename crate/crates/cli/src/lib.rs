//! Library surface of the command-line interface, exposed so integration
//! tests can drive the commands in-process.

pub mod commands;
pub mod config;
pub mod csvio;

use thiserror::Error;

/// CLI failure categories, mapped one-to-one onto exit codes.
#[derive(Debug, Error)]
pub enum CliError {
    /// Exit 2: configuration problems.
    #[error("config error: {0}")]
    Config(String),
    /// Exit 2: malformed input data.
    #[error("data error: {0}")]
    Data(String),
    /// Exit 3: estimation failures.
    #[error("estimation error: {0}")]
    Estimation(String),
    /// Exit 4: identification-check failures.
    #[error("identification check failed: {0}")]
    Identification(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) | CliError::Data(_) => 2,
            CliError::Estimation(_) => 3,
            CliError::Identification(_) => 4,
        }
    }
}
