//! Library surface of the command-line front end: configuration, data
//! ingestion, file formats and the subcommand implementations. The binary in
//! `main.rs` is a thin argument-parsing shell over this.

pub mod commands;
pub mod config;
pub mod data;
pub mod formats;
