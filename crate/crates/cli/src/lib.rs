//! Command-line driver and HTTP service over the `shapekit` core.

pub mod cli;
pub mod commands;
pub mod error;
pub mod inputs;
pub mod manifest;
pub mod service;
pub mod settings;
pub mod views;

pub use cli::Cli;
pub use error::{CliError, CliResult};
