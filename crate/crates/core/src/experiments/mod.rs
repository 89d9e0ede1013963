//! Sampling laws, Monte Carlo trials and coverage reports.

mod config;
mod distribution;
mod report;
mod runner;
pub mod validation;

pub use config::{ExperimentConfig, SchemeSpec};
pub use distribution::{Distribution, Sample, Sampler};
pub use report::{coverage_report, CoverageSummary};
pub use runner::{
    cached_bound_table, containment_slack, estimate_phi, estimate_risk, run_trials, write_trials_csv, ExperimentError,
    TrialResult, TrialStats, TRIALS_CSV_HEADER,
};
