//! Experiment driver for `dyadlab-core`: JSON configurations, named
//! fixtures, sampled-kernel files and the `dyadlab` command line.

pub mod cli;
pub mod commands;
pub mod config;
pub mod error;
pub mod fixtures;
pub mod kernel_file;
pub mod output;

pub use config::ExperimentConfig;
pub use error::{LabError, LabResult};
