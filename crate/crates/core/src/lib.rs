//! Honest adaptive confidence balls for a Hilbert-space parameter.
//!
//! Three observation models are supported: the Gaussian sequence model,
//! density estimation on `[0, 1]` and random-design regression on `[0, 1]`.
//! A ball is centered at any estimator built from one half of the data and
//! its radius comes from an unbiased estimate of the squared distance to the
//! truth computed on the other half. The radius is valid uniformly over a
//! Sobolev ellipsoid while its diameter adapts to smaller submodels.
//!
//! The [`harness`] module runs the Monte Carlo experiments behind the
//! command-line tool.

pub mod ball;
pub mod basis;
pub mod duality;
pub mod error;
pub mod estimators;
pub mod functional;
pub mod harness;
pub mod norm;
pub mod normal;
pub mod numeric;
pub mod rng;
pub mod sequence;

pub use ball::{build_ball, contains, cutoff, diameter, solve_radius, BallSettings, ConfidenceBall, CutoffPlan, Observations, SigmaSource};
pub use error::{Error, Result};
pub use estimators::{adaptive_estimator, project_to_ellipsoid, projection_estimator, CenterEstimate};
pub use norm::{quantile, r_kn, tau_plugin, NormEstimate, QuantileMode, QuantileRule};
pub use sequence::{
    boundary_theta, sample_sequence, select_window, sigma_hat, split_randomize, BoundaryProfile, Ellipsoid,
    ErrorDistribution, ErrorFamily, SequenceSample, SplitPair,
};
