//! Seeded Monte Carlo experiments with CSV reports.
//!
//! Every replication draws from generators keyed by
//! `(master seed, experiment, parameter, n, replication)`, and results are
//! gathered in index order, so reports do not depend on the thread count.

pub mod config;
pub mod experiments;
pub mod report;
pub mod stats;

mod sim;

pub use config::{
    EstimatorChoice, ExperimentConfig, ModelKind, ProfileSpec, ResidualSpec, RuleKind, SigmaChoice, SparsitySpec,
};
pub use experiments::{
    run_coverage, run_duality, run_normality, run_rates, run_sparse, with_threads, CoverageReport, DualityReport,
    NormalityReport, RateReport, SparseReport,
};
pub use report::{fmt_float, Table};
