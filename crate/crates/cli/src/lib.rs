//! Command-line front end for `pursuitlab`: file formats, subcommands and
//! batch experiments.

pub mod commands;
pub mod experiment;
pub mod formats;

pub use commands::{execute, Cli};
