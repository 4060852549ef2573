//! Experiment orchestration for the turbo-equalization simulator:
//! configuration, datasets, experiment drivers, result files and the `teq`
//! command line.

pub mod cli;
pub mod config;
pub mod dataset;
pub mod error;
pub mod experiments;
pub mod results;

pub use config::{EqualizerKind, ExperimentConfig};
pub use dataset::{generate_dataset, Dataset};
pub use error::{HarnessError, Result};
pub use results::{ResultRow, ResultSink};
