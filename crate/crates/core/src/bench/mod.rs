//! Experiment harness behind the `slq-bench` binary: configuration, rate
//! fitting and the experiments themselves.

pub mod config;
pub mod experiments;
pub mod rate;

pub use config::{Experiment, ExperimentConfig};
pub use experiments::{run, write_outputs, OutputPaths, RunOutput, Table};
pub use rate::{fit_rate, RateResult, SlopeFit};
