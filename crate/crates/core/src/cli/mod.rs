//! Configuration-driven experiment runner.

pub mod config;
pub mod studies;

use std::path::PathBuf;

use thiserror::Error;

pub use config::{ExperimentConfig, Study};
pub use studies::{run, StudyOutcome};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("{study} study failed: {source}")]
    Solver {
        study: Study,
        #[source]
        source: crate::Error,
    },

    #[error("cannot write {}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_ASSERTION: i32 = 3;
pub const EXIT_SOLVER: i32 = 4;

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => EXIT_CONFIG,
            CliError::Solver { .. } | CliError::Io { .. } => EXIT_SOLVER,
        }
    }
}
