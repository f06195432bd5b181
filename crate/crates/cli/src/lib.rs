//! Experiment runner behind the `lattice-flow` binary.

pub mod artifacts;
pub mod config;
pub mod plot;
pub mod simulate;
pub mod sweeps;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("i/o error: {0}")]
    Io(String),
    #[error(transparent)]
    Core(#[from] lattice_flow::Error),
}

impl CliError {
    /// Short machine-readable kind for the error line on stderr.
    pub fn kind(&self) -> &'static str {
        match self {
            CliError::Config(_) => "config",
            CliError::Io(_) => "io",
            CliError::Core(lattice_flow::Error::Config(_)) => "config",
            CliError::Core(lattice_flow::Error::Precondition(_)) => "precondition",
            CliError::Core(_) => "numerics",
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self.kind() {
            "config" | "precondition" => 2,
            "io" => 3,
            _ => 4,
        }
    }
}

/// Exit status when every enforced check passed.
pub const EXIT_PASS: i32 = 0;
/// Exit status when the run completed but a check failed.
pub const EXIT_CHECK_FAILED: i32 = 1;
