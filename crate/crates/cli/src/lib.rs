//! Experiment driver: config handling, pipeline stages and run manifests.

pub mod commands;
pub mod config;
pub mod manifest;

pub use commands::{
    calibrate_cyca, compare_runs, eval, gen_data, run_all, train, ComparisonReport, Options, RunLayout, SeedMetrics,
};
pub use config::ExperimentConfig;
