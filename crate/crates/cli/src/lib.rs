//! Batch runner for the grushin-core diagnostics.
//!
//! A run reads an [`ExperimentConfig`] (TOML plus command-line overrides),
//! executes one subcommand, and emits a check report and, where one is
//! computed, the frequency profile as CSV.

pub mod args;
pub mod config;
pub mod error;
pub mod experiment;
pub mod report;
pub mod run;
pub mod suites;

pub use config::ExperimentConfig;
pub use error::{CliError, CliResult};
pub use experiment::Experiment;
pub use report::{exit_code, Report, SuiteOutput};
pub use run::{run, Subcommand};
