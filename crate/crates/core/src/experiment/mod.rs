//! Experiment pipelines driven by a JSON configuration.
//!
//! Replicate `i` of a run with seed `s` draws all of its randomness from
//! [`crate::rng::replicate_rng`]`(s, i)`, so outputs do not depend on the
//! number of threads.

mod commands;
mod config;
pub mod stats;

pub use commands::{
    cmd_generate, cmd_kernel, cmd_lln, cmd_percolate, cmd_sandwich, cmd_scan, cmd_theory,
    cmd_trajectory, ode_from_trajectory, predict, DiscretisedPrediction, GenerateReport,
    KernelReport, LlnReport, PercolateReport, Prediction, ReplicateOutcome, ScanReport, ScanRow,
    TheoryReport, TrajectoryReport,
};
pub use config::{
    DiscretisationSpec, ExperimentConfig, ExperimentKind, KernelSpec, ScanSpec, Seeding,
    SequenceSpec, Tolerances, TrajectorySpec,
};
