//! Command-line front end: configuration parsing and the subcommand bodies.

pub mod commands;
pub mod config;
