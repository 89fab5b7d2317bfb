//! Command-line front end: configuration, figure presets and output files.

pub mod commands;
pub mod config;
pub mod error;
pub mod output;
