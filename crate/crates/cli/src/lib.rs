//! Command-line front end: configuration files, run manifests and the
//! subcommands of the `grwflash` binary.

pub mod config;
pub mod error;
pub mod manifest;
pub mod run;

pub use config::{load_config, parse_config, save_config, ExperimentConfig};
pub use error::CliError;
pub use manifest::{params_hash, RunManifest};
pub use run::{run_subcommand, Command, Overrides, RunOutput};
