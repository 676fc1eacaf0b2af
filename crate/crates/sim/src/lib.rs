//! Experiment harness: configuration, the per-trial simulation pipeline,
//! deterministic parallel Monte Carlo and CSV output for every figure.

pub mod config;
pub mod experiments;
pub mod pipeline;
pub mod runner;
pub mod table;

pub use config::{resolve, RunConfig};
pub use experiments::{run_experiment, Experiment};
pub use table::Table;
