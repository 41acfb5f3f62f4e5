//! Configuration files, reports and batch commands for `levypoll-core`.

pub mod commands;
pub mod config;
pub mod report;

pub use commands::{analyze, load, simulate, trace, transform, validate, CliError, Overrides, ValidationOutcome};
pub use config::{parse_config, ConfigDocument, ConfigError, Resolved};
