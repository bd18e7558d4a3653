//! Experiment harness around the `qff` crate: TOML experiment configs,
//! dataset files, result tables, and the commands behind the `qff-lab`
//! binary.

pub mod commands;
pub mod config;
pub mod dataset_io;
pub mod error;
pub mod stats;
pub mod table;

pub use commands::Context;
pub use config::ExperimentConfig;
pub use error::{LabError, Result};
