//! Threshold bootstrap percolation and the sequential exposure process.

mod bootstrap;
mod exposure;

pub use bootstrap::{
    run_bootstrap, run_bootstrap_masked, run_bootstrap_synchronous, seed_bernoulli,
    PercolationResult,
};
pub use exposure::{
    deviation_report, run_sequential_exposure, DeviationReport, ExposureOptions,
    PercolationTrajectory, TrajectoryRecord,
};
