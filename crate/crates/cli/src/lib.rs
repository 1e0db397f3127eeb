//! File formats, run directories and subcommands for the `ibt` tool.

pub mod commands;
pub mod config;
pub mod formats;
pub mod rundir;
