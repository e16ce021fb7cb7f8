//! Reference values and replicated convergence studies.

mod config;
mod convergence;
mod rate;
mod sampler;
mod truth;

pub use config::{default_grid, full_grid, ExperimentConfig, TruthSource, TruthValues, DEFAULT_LEVEL, DEFAULT_REPLICATIONS};
pub use convergence::{
    run_convergence, run_convergence_with, Metric, RateSummary, ResultRow, ResultTable, CSV_HEADER, CSV_LEGEND,
    PRE_ASYMPTOTIC_EVALUATIONS,
};
pub use rate::{fit_rate, RateFit};
pub use sampler::{estimate_once, mc_points, points, randomize_for, Sampler};
pub use truth::{mc_truth, mc_truth_with, MIN_TRUTH_SAMPLES, TruthEstimate, TruthOptions};
