//! One replication of generate → split → center → ball, for each model.

use rayon::prelude::*;

use crate::ball::{build_ball, cutoff, BallSettings, ConfidenceBall, Observations, SigmaSource};
use crate::error::{Error, Result};
use crate::estimators::{adaptive_estimator_sigma, full_grid, project_to_ellipsoid, projection_estimator, ure_select};
use crate::functional::{
    density_moments, regression_moments, sample_density, sample_regression, true_coeffs, CoefficientMoments, NoiseSpec,
};
use crate::rng::{derive_seed, STREAM_SECOND};
use crate::sequence::{sample_sequence_with, select_window, sigma_hat, split_randomize, Ellipsoid, ErrorDistribution, SplitPair};

use super::config::{EstimatorChoice, ExperimentConfig, ModelKind, SigmaChoice};

/// Everything fixed within one (parameter, n) cell.
pub(crate) struct Cell<'a> {
    pub cfg: &'a ExperimentConfig,
    /// Supermodel; the ball and the projection use it.
    pub model: Ellipsoid,
    /// True parameter (sequence coefficients or basis coefficients).
    pub theta: Vec<f64>,
    pub n: usize,
    pub settings: BallSettings,
    /// Truncation length of sequence samples.
    pub truncation: usize,
    pub window: Option<(usize, usize)>,
    /// Seed prefix: experiment tag and parameter index.
    pub tag: [u64; 2],
}

/// The ball and the truncation level of its center.
pub(crate) struct RepResult {
    pub ball: ConfidenceBall,
    pub k_hat: usize,
}

impl<'a> Cell<'a> {
    /// Cell with the cut-off, window and truncation resolved. `k` overrides
    /// the cut-off; `theta` must lie in `model`.
    pub fn new(
        cfg: &'a ExperimentConfig,
        model: Ellipsoid,
        theta: Vec<f64>,
        n: usize,
        k: Option<usize>,
        tag: [u64; 2],
    ) -> Result<Self> {
        let mut settings = BallSettings::new(cfg.quantile_rule()?);
        settings.floor = cfg.floor;
        settings.errors = ErrorDistribution::new(cfg.errors);
        settings.k = k;
        let mut theta = theta;
        let radius_n = match cfg.model {
            ModelKind::Sequence => n,
            _ => n - n / 2,
        };
        let k_used = match k {
            Some(k) => k,
            None => cutoff(&model, radius_n)?.k,
        };
        let mut truncation = k_used.max(theta.len()).max(cfg.truncation.unwrap_or(1));
        let mut window = None;
        match cfg.model {
            ModelKind::Sequence => {
                if let SigmaChoice::Estimated(w) = cfg.sigma {
                    let (m, l) = match w {
                        Some(w) => w,
                        None => select_window(model.beta(), n, model.finite_dim())?,
                    };
                    settings.sigma = SigmaSource::Estimated { m, l };
                    truncation = truncation.max(m + l);
                    window = Some((m, l));
                }
                if let Some(dim) = model.finite_dim() {
                    if truncation > dim {
                        return Err(Error::Config(format!(
                            "truncation {truncation} exceeds model dimension {dim}"
                        )));
                    }
                }
            }
            ModelKind::Density | ModelKind::Regression => {
                if cfg.sigma != SigmaChoice::Known {
                    return Err(Error::Config("estimated noise variance needs the sequence model".into()));
                }
                theta = true_coeffs(&cfg.function, k_used.max(theta.len()))?;
            }
        }
        if !model.contains(&theta) {
            return Err(Error::Config("true parameter lies outside the supermodel".into()));
        }
        Ok(Self {
            cfg,
            model,
            theta,
            n,
            settings,
            truncation,
            window,
            tag,
        })
    }

    fn seed(&self, rep: u64) -> u64 {
        derive_seed(self.cfg.seed, &[self.tag[0], self.tag[1], self.n as u64, rep])
    }

    fn finish_center(&self, theta_hat: Vec<f64>) -> Vec<f64> {
        if self.cfg.project {
            project_to_ellipsoid(&theta_hat, &self.model)
        } else {
            theta_hat
        }
    }

    pub fn replicate(&self, rep: u64) -> Result<RepResult> {
        let seed = self.seed(rep);
        match self.cfg.model {
            ModelKind::Sequence => self.sequence_rep(seed),
            ModelKind::Density => {
                let data = sample_density(&self.cfg.function, self.n, seed)?;
                let (first, second) = data.split_halves()?;
                let k = self.ball_k(second.n())?;
                let (theta_hat, k_hat) = self.coefficient_center(&density_moments(&first, k)?)?;
                let theta_hat = self.finish_center(theta_hat);
                let ball = build_ball(Observations::Density(&second), &theta_hat, &self.model, &self.settings)?;
                Ok(RepResult { ball, k_hat })
            }
            ModelKind::Regression => {
                let noise = NoiseSpec {
                    s0: self.cfg.noise_s0,
                    s1: self.cfg.noise_s1,
                    family: self.cfg.errors,
                };
                let data = sample_regression(&self.cfg.function, &noise, self.n, seed)?;
                let (first, second) = data.split_halves()?;
                let k = self.ball_k(second.n())?;
                let (theta_hat, k_hat) = self.coefficient_center(&regression_moments(&first, k)?)?;
                let theta_hat = self.finish_center(theta_hat);
                let ball = build_ball(Observations::Regression(&second), &theta_hat, &self.model, &self.settings)?;
                Ok(RepResult { ball, k_hat })
            }
        }
    }

    fn ball_k(&self, n: usize) -> Result<usize> {
        match self.settings.k {
            Some(k) => Ok(k),
            None => Ok(cutoff(&self.model, n)?.k),
        }
    }

    /// Empirical coefficients truncated by the estimator choice.
    fn coefficient_center(&self, mom: &CoefficientMoments) -> Result<(Vec<f64>, usize)> {
        let len = mom.means.len();
        let k_hat = match self.cfg.estimator {
            EstimatorChoice::Projection(k) => k.min(len),
            EstimatorChoice::Adaptive => ure_select(&mom.means, &mom.mean_vars, &full_grid(len))?,
        };
        Ok((mom.means[..k_hat].to_vec(), k_hat))
    }

    fn sequence_rep(&self, seed: u64) -> Result<RepResult> {
        let cfg = self.cfg;
        let errors = ErrorDistribution::new(cfg.errors);
        let pair = if errors.is_gaussian() {
            let x = sample_sequence_with(&self.theta, cfg.sigma2, self.n, self.truncation, seed, &errors)?;
            split_randomize(&x, seed)
        } else {
            // the split needs Gaussian noise; draw two independent halves
            let s2 = 2.0 * cfg.sigma2;
            SplitPair {
                first: sample_sequence_with(&self.theta, s2, self.n, self.truncation, seed, &errors)?,
                second: sample_sequence_with(
                    &self.theta,
                    s2,
                    self.n,
                    self.truncation,
                    derive_seed(seed, &[STREAM_SECOND]),
                    &errors,
                )?,
            }
        };
        let first = &pair.first;
        let center = match cfg.estimator {
            EstimatorChoice::Projection(k) => projection_estimator(first, k.min(first.len()))?,
            EstimatorChoice::Adaptive => {
                let s2 = match self.window {
                    Some((m, l)) => sigma_hat(first, m, l)?,
                    None => first.sigma2(),
                };
                adaptive_estimator_sigma(first, &full_grid(first.len()), s2)?
            }
        };
        let k_hat = center.k_used;
        let theta_hat = self.finish_center(center.theta_hat);
        let ball = build_ball(Observations::Sequence(&pair.second), &theta_hat, &self.model, &self.settings)?;
        Ok(RepResult { ball, k_hat })
    }

    /// All replications, in index order regardless of scheduling.
    pub fn run<T, F>(&self, reps: usize, f: F) -> Result<Vec<T>>
    where
        T: Send,
        F: Fn(&RepResult) -> T + Sync,
    {
        (0..reps as u64)
            .into_par_iter()
            .map(|rep| self.replicate(rep).map(|r| f(&r)))
            .collect()
    }
}

/// `‖x − y‖` with zero padding.
pub(crate) fn distance(x: &[f64], y: &[f64]) -> f64 {
    let len = x.len().max(y.len());
    (0..len)
        .map(|i| {
            let d = x.get(i).copied().unwrap_or(0.0) - y.get(i).copied().unwrap_or(0.0);
            d * d
        })
        .sum::<f64>()
        .sqrt()
}
