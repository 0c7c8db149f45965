//! Experiment harness for `sqd-core`: configuration, corpus formats,
//! checkpoints, metric files, parallel sweeps and the `sqd` command line.

pub mod checkpoint;
pub mod cli;
pub mod config;
pub mod error;
pub mod io;
pub mod metrics;
pub mod report;
pub mod run;

pub use config::RunConfig;
pub use error::{HarnessError, Result};
