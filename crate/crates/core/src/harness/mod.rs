//! Experiment orchestration: configuration, seeded replication loops, the
//! rate regression, and CSV output.

pub mod config;
pub mod csv;
pub mod study;

pub use config::ExperimentConfig;
pub use study::{fit_loglog_slope, replication_seed, run_rate_study, RateStudyResult};
