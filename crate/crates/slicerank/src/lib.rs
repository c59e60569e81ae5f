//! Files, configuration and the command line for `slicerank-core`.
//!
//! Corpora are JSON lines, configurations and reports are JSON, tables are
//! CSV/TSV, and every command that writes files also writes a
//! `manifest.json` with SHA-256 digests of what it read and wrote.

pub mod checkpoint;
pub mod cli;
pub mod commands;
pub mod config;
pub mod error;
pub mod io;
pub mod manifest;
pub mod reports;

pub use error::{CliError, CliResult};
