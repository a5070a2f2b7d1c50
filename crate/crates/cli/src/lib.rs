//! File formats and subcommand implementations behind the `airground`
//! binary.

pub mod commands;
pub mod config;
pub mod manifest;
pub mod plot;
pub mod records;
