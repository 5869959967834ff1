//! Command-line front end for `rks-core`: CSV ingestion, synthetic data,
//! training and prediction, cross-validation, kernel approximation reports
//! and the accuracy-versus-cost benchmark.

pub mod bench;
pub mod commands;
pub mod config;
pub mod data;
pub mod error;
pub mod report;
pub mod synth;

pub use commands::{fit_from_args, run, Cli, ModelFile};
pub use error::{CliError, Result};
