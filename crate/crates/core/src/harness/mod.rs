//! Experiment harness: config schema, commands and CSV output.

pub mod commands;
pub mod config;
pub mod output;

pub use commands::{cmd_gen, cmd_mri, cmd_oracle, cmd_run, cmd_sweep, Context, Report};
pub use config::{ExperimentConfig, ExperimentKind};
