//! Experiment harness: configuration, experiment drivers and report emission.

pub mod config;
pub mod error;
pub mod experiments;
pub mod report;

pub use config::{Experiment, ExperimentConfig};
pub use error::{HarnessError, Result};
pub use report::{emit_report, Cell, ExperimentReport};
