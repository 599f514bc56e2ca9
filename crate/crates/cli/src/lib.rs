//! Experiment harness for the MIMO-detection workbench: configuration,
//! training orchestration, Monte-Carlo BER sweeps, complexity reports,
//! checkpoint persistence, and CSV emission.

pub mod checkpoint;
pub mod commands;
pub mod config;
pub mod csvio;
pub mod error;
pub mod sweep;

pub use config::ExperimentConfig;
pub use error::{CliError, Result};
