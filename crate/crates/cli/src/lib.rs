//! Experiment runner for externality-based adaptive incentives.
//!
//! Each experiment is one JSON file naming a game, the incentive mechanism,
//! the coupled-run settings and a list of analyses. `run` executes the coupled
//! iteration and writes a trajectory CSV, a summary and per-analysis reports;
//! `verify` runs the analyses alone.

pub mod analyses;
pub mod config;
pub mod experiment;
pub mod game;

use std::path::PathBuf;

pub use config::ExperimentConfig;
pub use experiment::{run_experiment, verify_experiment, ExperimentOutcome};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{path}: {message}", path = path.display())]
    Config {
        path: PathBuf,
        /// 1-based; zero when the error is semantic rather than syntactic.
        line: usize,
        column: usize,
        message: String,
    },
    #[error("{path}: {source}", path = path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Core(#[from] incentive_core::Error),
}

/// Outcome of an invocation, mapped to the process exit code.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Status {
    Success,
    /// The run did not converge, or a verification check failed.
    Failure,
    /// Unreadable or invalid configuration.
    Invalid,
}

impl Status {
    pub fn code(self) -> i32 {
        match self {
            Status::Success => 0,
            Status::Invalid => 1,
            Status::Failure => 2,
        }
    }
}

impl CliError {
    pub fn status(&self) -> Status {
        match self {
            CliError::Config { .. } | CliError::Io { .. } => Status::Invalid,
            CliError::Core(incentive_core::Error::InvalidArgument(_) | incentive_core::Error::InvalidSpec(_)) => {
                Status::Invalid
            }
            CliError::Core(_) => Status::Failure,
        }
    }
}

/// Builtin fixtures, one per line as `name  description`.
pub fn list_fixtures() -> String {
    incentive_core::routing::FIXTURES
        .iter()
        .map(|(name, description)| format!("{name:<10} {description}\n"))
        .collect()
}
