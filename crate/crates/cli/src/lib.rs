//! Command-line driver: synthetic data, dictionary building,
//! classification, benchmark sweeps and chain diagnostics.

pub mod commands;
pub mod config;
pub mod error;
pub mod formats;

pub use config::{Command, RunConfig};
pub use error::{CliError, Result};
