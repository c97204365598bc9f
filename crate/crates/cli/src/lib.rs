//! Library half of the `motifcast` binary: configuration, data
//! preparation and the subcommands, exposed for integration tests.

pub mod args;
pub mod cmd;
pub mod config;
pub mod data;
pub mod output;
