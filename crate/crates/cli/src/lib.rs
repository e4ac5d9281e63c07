//! Library side of the command-line harness: experiment sweeps, command
//! implementations and plotting, shared by the binary and the test suites.

pub mod commands;
pub mod error;
pub mod experiment;
pub mod plot;

pub use error::{CliError, CliResult};
