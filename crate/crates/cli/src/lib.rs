//! Experiment harness: configuration files, convergence runs over a list of
//! approximation sizes, and CSV artifacts.

use std::path::{Path, PathBuf};

pub mod config;
pub mod experiment;
pub mod report;

pub use config::{parse_config, ConfigErrors, ExperimentConfig};
pub use experiment::{run_experiment, write_artifacts, ExperimentOutcome, RunOptions};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("invalid config:\n{0}")]
    Config(#[from] ConfigErrors),
    #[error("invalid instance: {0}")]
    Model(wardrop_approx::Error),
    #[error("solver failed: {0}")]
    Solver(wardrop_approx::Error),
    #[error("{0} approximation(s) did not converge")]
    NotConverged(usize),
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{}: {source}", path.display())]
    Csv { path: PathBuf, source: csv::Error },
}

impl CliError {
    pub fn io(path: &Path, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.to_path_buf(),
            source,
        }
    }

    /// 1 for invalid input, 2 for solver failures, 3 for I/O.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) | CliError::Model(_) => 1,
            CliError::Solver(_) | CliError::NotConverged(_) => 2,
            CliError::Io { .. } | CliError::Csv { .. } => 3,
        }
    }
}

/// Reads and validates a config file.
pub fn load_config(path: &Path) -> Result<ExperimentConfig, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    Ok(parse_config(&text)?)
}
