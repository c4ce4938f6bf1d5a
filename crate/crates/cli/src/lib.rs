//! Command-line pipeline around `rsack-core`: simulation, estimation,
//! rectification and the experiment harness.

pub mod bench;
pub mod cli;
pub mod commands;
pub mod error;
pub mod io;
pub mod manifest;
pub mod sweep;

pub use error::{CliError, Result};
