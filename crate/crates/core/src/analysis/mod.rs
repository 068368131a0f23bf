//! Summary statistics and experiment runners.

pub mod experiments;
mod stats;

pub use experiments::{
    run_experiment, Experiment, ExperimentKind, ExperimentParams, ExperimentRegistry,
    ExperimentSpec, RunReport, Verdict,
};
pub use stats::*;
