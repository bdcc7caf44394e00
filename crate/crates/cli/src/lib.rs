//! Command-line driver: configuration parsing, run modes and output files.

pub mod config;
pub mod error;
pub mod run;

pub use config::{parse_config, parse_config_str, Mode, RawConfig, RunConfig};
pub use error::CliError;
pub use run::{run, RunReport};
