//! Estimation of `‖θ − θ̂‖²` in the sequence model, its scale, and quantiles.

use rayon::prelude::*;

use crate::error::{invalid, Error, Result};
use crate::normal;
use crate::rng::{derive_seed, stream_rng, STREAM_QUANTILE};
use crate::sequence::{ErrorDistribution, SequenceSample};

/// An unbiased estimate `r` of `Σ_{i≤k}(θᵢ − θ̂ᵢ)²` together with the
/// components of its standard deviation `τ̂² = a + b·s² + c·s₁`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NormEstimate {
    pub r: f64,
    pub a: f64,
    pub b: f64,
    /// Cross coefficient on the signed residual sum, zero for symmetric errors.
    pub c: f64,
    /// Correlation bound between `ε²` and `ε`; `τ̂²` lies within a factor
    /// `1 ± c0` of `a + b·s²`.
    pub c0: f64,
    pub k: usize,
    pub n: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PluginScale {
    pub tau: f64,
    /// Set when the radicand fell below its theoretical floor and was clamped.
    pub clamped: bool,
}

impl NormEstimate {
    pub fn tau(&self, s2: f64, s1: f64) -> f64 {
        tau_plugin(self, s2, s1).tau
    }

    /// Upper envelope of `τ̂²` as a function of `s²` alone:
    /// `(1 + c0)(a + b·s²)`. Equal to `τ̂²` in the symmetric case.
    pub fn inflated(&self) -> (f64, f64) {
        let f = 1.0 + self.c0.abs();
        (f * self.a, f * self.b)
    }
}

/// `τ̂ = √(a + b·s2 + c·s1)`.
pub fn tau_plugin(est: &NormEstimate, s2: f64, s1: f64) -> PluginScale {
    let base = est.a + est.b * s2.max(0.0);
    let v = base + est.c * s1;
    let floor = (1.0 - est.c0.abs()) * base;
    if v >= floor && v > 0.0 {
        PluginScale {
            tau: v.sqrt(),
            clamped: false,
        }
    } else {
        PluginScale {
            tau: floor.max(0.0).sqrt(),
            clamped: true,
        }
    }
}

/// `(a, b, c)` for errors with the moments of `dist`:
/// `a = kσ⁴var(ε²)/n²`, `b = 4σ²/n`, `c = 4σ³cov(ε², ε)/(n√n)`.
pub fn nonnormal_variance_components(
    dist: &ErrorDistribution,
    k: usize,
    n: usize,
    sigma2: f64,
) -> Result<(f64, f64, f64)> {
    if k == 0 {
        return invalid("cut-off must be at least 1");
    }
    if n == 0 {
        return invalid("sample size must be positive");
    }
    if !(sigma2 > 0.0) {
        return invalid(format!("noise variance must be positive, got {sigma2}"));
    }
    let (Some(var), Some(cov)) = (dist.var_eps2(), dist.cov_eps2_eps()) else {
        return invalid(format!(
            "error family '{}' carries no moment metadata",
            dist.family().name()
        ));
    };
    let nf = n as f64;
    let a = k as f64 * sigma2 * sigma2 * var / (nf * nf);
    let b = 4.0 * sigma2 / nf;
    let c = 4.0 * sigma2.powf(1.5) * cov / (nf * nf.sqrt());
    Ok((a, b, c))
}

/// `R_{k,n}(θ̂) = Σ_{i≤k}(Xᵢ − θ̂ᵢ)² − kσ²/n` with Gaussian variance components.
pub fn r_kn(x: &SequenceSample, theta_hat: &[f64], k: usize) -> Result<NormEstimate> {
    sequence_r_kn(x, theta_hat, k, x.sigma2(), &ErrorDistribution::standard_normal())
}

/// As [`r_kn`], with an explicit (possibly estimated) `σ²` and error law.
pub fn sequence_r_kn(
    x: &SequenceSample,
    theta_hat: &[f64],
    k: usize,
    sigma2: f64,
    errors: &ErrorDistribution,
) -> Result<NormEstimate> {
    if k == 0 {
        return invalid("cut-off must be at least 1");
    }
    if k > x.len() {
        return invalid(format!("cut-off {k} exceeds truncation length {}", x.len()));
    }
    let (a, b, c) = nonnormal_variance_components(errors, k, x.n(), sigma2)?;
    let rss: f64 = x.values()[..k]
        .iter()
        .enumerate()
        .map(|(i, &xi)| {
            let d = xi - theta_hat.get(i).copied().unwrap_or(0.0);
            d * d
        })
        .sum();
    Ok(NormEstimate {
        r: rss - k as f64 * sigma2 / x.n() as f64,
        a,
        b,
        c,
        c0: errors.correlation_bound().unwrap_or(0.0),
        k,
        n: x.n(),
    })
}

/// `(s², s₁) = (Σ_{i≤k}(θᵢ − θ̂ᵢ)², Σ_{i≤k}(θᵢ − θ̂ᵢ))`.
pub fn truncated_residual(theta: &[f64], theta_hat: &[f64], k: usize) -> (f64, f64) {
    (0..k).fold((0.0, 0.0), |(s2, s1), i| {
        let d = theta.get(i).copied().unwrap_or(0.0) - theta_hat.get(i).copied().unwrap_or(0.0);
        (s2 + d * d, s1 + d)
    })
}

/// `(r − s²)/τ̂` evaluated at the true `θ` (Gaussian scale).
pub fn standardized_statistic(
    x: &SequenceSample,
    theta: &[f64],
    theta_hat: &[f64],
    k: usize,
) -> Result<f64> {
    standardized_statistic_with(x, theta, theta_hat, k, &ErrorDistribution::standard_normal())
}

pub fn standardized_statistic_with(
    x: &SequenceSample,
    theta: &[f64],
    theta_hat: &[f64],
    k: usize,
    errors: &ErrorDistribution,
) -> Result<f64> {
    let est = sequence_r_kn(x, theta_hat, k, x.sigma2(), errors)?;
    let (s2, s1) = truncated_residual(theta, theta_hat, k);
    Ok((est.r - s2) / est.tau(s2, s1))
}

#[derive(Debug, Clone, PartialEq)]
pub enum QuantileMode {
    /// `Φ⁻¹(1 − α)`.
    Normal,
    /// `√(1/α)`.
    Chebyshev,
    /// Exact simulation of the statistic's law at a reference parameter.
    Simulated {
        reps: usize,
        seed: u64,
        /// Use `|S|` instead of the lower tail.
        two_sided: bool,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct QuantileRule {
    pub mode: QuantileMode,
    pub alpha: f64,
}

impl QuantileRule {
    pub fn new(mode: QuantileMode, alpha: f64) -> Result<Self> {
        check_alpha(alpha)?;
        if let QuantileMode::Simulated { reps, .. } = mode {
            if reps < 1000 {
                return invalid(format!("simulated quantiles need at least 1000 draws, got {reps}"));
            }
        }
        Ok(Self { mode, alpha })
    }

    pub fn normal(alpha: f64) -> Result<Self> {
        Self::new(QuantileMode::Normal, alpha)
    }

    pub fn chebyshev(alpha: f64) -> Result<Self> {
        Self::new(QuantileMode::Chebyshev, alpha)
    }

    pub fn name(&self) -> &'static str {
        match self.mode {
            QuantileMode::Normal => "normal",
            QuantileMode::Chebyshev => "chebyshev",
            QuantileMode::Simulated { .. } => "simulated",
        }
    }
}

fn check_alpha(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha < 1.0 {
        Ok(())
    } else {
        invalid(format!("level must lie in (0, 1), got {alpha}"))
    }
}

/// Everything needed to simulate the law of `(R − s²)/τ̂` exactly.
#[derive(Debug, Clone)]
pub struct SimulationContext<'a> {
    pub theta_ref: &'a [f64],
    pub theta_hat: &'a [f64],
    pub k: usize,
    pub n: usize,
    pub sigma2: f64,
    pub errors: ErrorDistribution,
}

/// Draws of the standardized statistic under `theta_ref`. Only the residual
/// `θ − θ̂` on the first `k` coordinates matters.
pub fn simulate_statistic(ctx: &SimulationContext<'_>, reps: usize, seed: u64) -> Result<Vec<f64>> {
    let k = ctx.k;
    if k == 0 {
        return invalid("cut-off must be at least 1");
    }
    let (a, b, c) = nonnormal_variance_components(&ctx.errors, k, ctx.n, ctx.sigma2)?;
    let c0 = ctx.errors.correlation_bound().unwrap_or(0.0);
    let d: Vec<f64> = (0..k)
        .map(|i| ctx.theta_ref.get(i).copied().unwrap_or(0.0) - ctx.theta_hat.get(i).copied().unwrap_or(0.0))
        .collect();
    let (s2, s1) = (d.iter().map(|v| v * v).sum::<f64>(), d.iter().sum::<f64>());
    let est = NormEstimate { r: 0.0, a, b, c, c0, k, n: ctx.n };
    let tau = est.tau(s2, s1);
    let nv = ctx.sigma2 / ctx.n as f64;
    let scale = nv.sqrt();
    let errors = ctx.errors;
    let draws = (0..reps as u64)
        .into_par_iter()
        .map(|rep| {
            let mut rng = stream_rng(derive_seed(seed, &[rep]), STREAM_QUANTILE);
            let rss: f64 = d
                .iter()
                .map(|&di| {
                    let v = di + scale * errors.sample(&mut rng);
                    v * v
                })
                .sum();
            (rss - k as f64 * nv - s2) / tau
        })
        .collect();
    Ok(draws)
}

/// Quantile `z` used in the radius. Simulated mode needs a context.
pub fn quantile(rule: &QuantileRule, context: Option<&SimulationContext<'_>>) -> Result<f64> {
    check_alpha(rule.alpha)?;
    match rule.mode {
        QuantileMode::Normal => Ok(normal::inv_cdf(1.0 - rule.alpha)),
        QuantileMode::Chebyshev => Ok((1.0 / rule.alpha).sqrt()),
        QuantileMode::Simulated { reps, seed, two_sided } => {
            if reps < 1000 {
                return invalid(format!("simulated quantiles need at least 1000 draws, got {reps}"));
            }
            let ctx = context
                .ok_or_else(|| Error::InvalidArgument("simulated quantile needs a simulation context".into()))?;
            let mut draws = simulate_statistic(ctx, reps, seed)?;
            if two_sided {
                draws.iter_mut().for_each(|s| *s = s.abs());
                draws.sort_by(f64::total_cmp);
                let idx = (reps as f64 * (1.0 - rule.alpha)).ceil() as usize;
                Ok(draws[idx.clamp(1, reps) - 1])
            } else {
                draws.sort_by(f64::total_cmp);
                let idx = (reps as f64 * rule.alpha).ceil() as usize;
                Ok(-draws[idx.clamp(1, reps) - 1])
            }
        }
    }
}
