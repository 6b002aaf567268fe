//! File formats and the `covert` command-line front end for the
//! covert-capacity toolkit in `covert-core`.
//!
//! * [`channel_file`]: channel JSON with a canonical, byte-stable form.
//! * [`solution`]: capacity solutions as JSON.
//! * [`report`]: simulation CSV and JSON reports, surface CSV.
//! * [`manifest`]: run manifests beside every output.
//! * [`cli`]: subcommands and exit codes.

pub mod channel_file;
pub mod cli;
pub mod error;
pub mod manifest;
pub mod report;
pub mod solution;

pub use error::{CliError, CliResult};
