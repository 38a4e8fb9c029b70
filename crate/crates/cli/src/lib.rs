//! File formats, commands and experiment presets behind the `speedscale` binary.

pub mod commands;
pub mod error;
pub mod experiment;
pub mod format;

pub use error::CliError;
