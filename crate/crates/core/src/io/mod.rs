//! Configuration files, CSV/JSON outputs and command-line runs.

pub mod config;
pub mod manifest;
pub mod output;
pub mod run;

pub use config::{parse_config, parse_config_with, OutputSpec, RunConfig};
pub use manifest::{write_atomic, RunManifest};
pub use run::{execute, RunOptions, RunOutcome, EXIT_CHECK_FAILED, EXIT_ERROR, EXIT_PASS};
