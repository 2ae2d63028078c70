//! Experiment driver for the `wsn-gossip` simulator: config parsing, the
//! `run`/`sweep`/`compare`/`spectra` subcommands and their CSV outputs.

pub mod commands;
pub mod config;
pub mod error;
pub mod experiment;

pub use commands::{cmd_compare, cmd_run, cmd_spectra, cmd_sweep, simulate};
pub use config::{Backend, Invocation, ReproTarget, Settings};
pub use error::{CliError, EXIT_CONFIG, EXIT_NOT_CONVERGED, EXIT_OK, EXIT_RUNTIME};
pub use experiment::ExperimentSpec;
