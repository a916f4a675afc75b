//! Command-line front end: configuration, presets and the artifact writers
//! behind `parstirap design | propagate | sweep | noise | shape`.

pub mod commands;
pub mod config;
pub mod error;
mod plots;

pub use error::CliError;
