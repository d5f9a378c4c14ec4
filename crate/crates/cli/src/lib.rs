//! Command-line driver: configuration, experiment runners and output files.
pub mod config;
pub mod error;
pub mod experiments;

pub use config::{Command, GridMode, RunConfig};
pub use error::{CliError, Result};
