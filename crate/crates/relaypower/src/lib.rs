//! Experiment harness for `relaypower-core`: TOML experiment files, parallel
//! Monte Carlo sweeps and CSV output.

pub mod config;
pub mod experiment;
pub mod sweep;

use std::path::PathBuf;

pub use config::{load_config, parse_config, write_config, ExperimentConfig};
pub use experiment::{emit_curve_data, run_experiment, savings_lines, ExperimentReport};
pub use sweep::{run_point, run_sweep, SweepOptions, SweepPoint};

#[derive(Debug, thiserror::Error)]
pub enum RunError {
    /// Invalid or unreadable configuration.
    #[error("{0}")]
    Config(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("csv output: {0}")]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Model(#[from] relaypower_core::Error),
    #[error("{0}")]
    Runtime(String),
}

impl RunError {
    /// Process exit status: 1 for configuration problems, 2 otherwise.
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Config(_) => 1,
            _ => 2,
        }
    }
}
