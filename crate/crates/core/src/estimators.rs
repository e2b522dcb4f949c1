//! Centering estimators built from the first half of the data.

use crate::error::{invalid, Result};
use crate::numeric::bisect;
use crate::sequence::{Ellipsoid, SequenceSample};

#[derive(Debug, Clone, PartialEq)]
pub struct CenterEstimate {
    pub theta_hat: Vec<f64>,
    pub k_used: usize,
    pub projected: bool,
}

impl CenterEstimate {
    /// Replaces the center by its projection onto `model`.
    pub fn project(mut self, model: &Ellipsoid) -> Self {
        self.theta_hat = project_to_ellipsoid(&self.theta_hat, model);
        self.projected = true;
        self
    }
}

/// `θ̂ᵢ = Xᵢ` for `i ≤ k`, zero beyond.
pub fn projection_estimator(first: &SequenceSample, k: usize) -> Result<CenterEstimate> {
    if k == 0 || k > first.len() {
        return invalid(format!("truncation {k} outside 1..={}", first.len()));
    }
    Ok(CenterEstimate {
        theta_hat: first.values()[..k].to_vec(),
        k_used: k,
        projected: false,
    })
}

/// Unbiased risk `URE(k) = Σ_{i≤k} vᵢ + Σ_{i>k}(θ̃ᵢ² − vᵢ)` of truncating the raw
/// estimates `θ̃` (with per-coordinate variances `v`) at each grid point.
pub fn ure_curve(raw: &[f64], variances: &[f64], grid: &[usize]) -> Result<Vec<f64>> {
    if grid.is_empty() {
        return invalid("truncation grid is empty");
    }
    let len = raw.len();
    if variances.len() != len {
        return invalid("estimates and variances differ in length");
    }
    if let Some(&bad) = grid.iter().find(|&&k| k == 0 || k > len) {
        return invalid(format!("grid point {bad} outside 1..={len}"));
    }
    // prefix[k] = Σ_{i≤k} vᵢ, suffix[k] = Σ_{i>k}(θ̃ᵢ² − vᵢ)
    let mut prefix = vec![0.0; len + 1];
    for i in 0..len {
        prefix[i + 1] = prefix[i] + variances[i];
    }
    let mut suffix = vec![0.0; len + 1];
    for i in (0..len).rev() {
        suffix[i] = suffix[i + 1] + raw[i] * raw[i] - variances[i];
    }
    Ok(grid.iter().map(|&k| prefix[k] + suffix[k]).collect())
}

/// Grid point minimizing the curve; ties go to the smaller `k`.
pub fn ure_select(raw: &[f64], variances: &[f64], grid: &[usize]) -> Result<usize> {
    let curve = ure_curve(raw, variances, grid)?;
    let mut best = (grid[0], curve[0]);
    for (&k, &u) in grid.iter().zip(&curve).skip(1) {
        if u < best.1 || (u == best.1 && k < best.0) {
            best = (k, u);
        }
    }
    Ok(best.0)
}

/// Truncation at the URE minimizer over `k_grid`, noise level `σ²/n` taken
/// from the sample.
pub fn adaptive_estimator(first: &SequenceSample, k_grid: &[usize]) -> Result<CenterEstimate> {
    adaptive_estimator_sigma(first, k_grid, first.sigma2())
}

/// As [`adaptive_estimator`] with a supplied (possibly estimated) `σ²`.
pub fn adaptive_estimator_sigma(first: &SequenceSample, k_grid: &[usize], sigma2: f64) -> Result<CenterEstimate> {
    let v = vec![sigma2 / first.n() as f64; first.len()];
    let k = ure_select(first.values(), &v, k_grid)?;
    projection_estimator(first, k)
}

/// `1..=len`.
pub fn full_grid(len: usize) -> Vec<usize> {
    (1..=len).collect()
}

/// ℓ₂ projection onto the ellipsoid: `θᵢ/(1 + λi^{2β})` with `λ` chosen so
/// the constraint binds. Members are returned unchanged.
pub fn project_to_ellipsoid(theta_hat: &[f64], model: &Ellipsoid) -> Vec<f64> {
    let mut t = theta_hat.to_vec();
    if let Some(dim) = model.finite_dim() {
        t.iter_mut().skip(dim).for_each(|v| *v = 0.0);
    }
    while t.last() == Some(&0.0) {
        t.pop();
    }
    if !model.is_bounded() || model.contains(&t) {
        if t.len() < theta_hat.len() {
            t.resize(theta_hat.len(), 0.0);
        }
        return t;
    }
    let w: Vec<f64> = (1..=t.len()).map(|i| (i as f64).powf(2.0 * model.beta())).collect();
    let l2 = model.radius() * model.radius();
    let excess = |lam: f64| -> f64 {
        t.iter()
            .zip(&w)
            .map(|(v, wi)| {
                let p = v / (1.0 + lam * wi);
                p * p * wi
            })
            .sum::<f64>()
            - l2
    };
    let mut hi = 1.0;
    while excess(hi) > 0.0 {
        hi *= 2.0;
    }
    // the upper end of the bracket keeps the constraint satisfied
    let (_, lam) = bisect(|l| excess(l) <= 0.0, 0.0, hi, 1e-12 * hi);
    let mut out: Vec<f64> = t.iter().zip(&w).map(|(v, wi)| v / (1.0 + lam * wi)).collect();
    out.resize(theta_hat.len().max(out.len()), 0.0);
    out
}

/// `max_{i≤k}|θ̂ᵢ − θᵢ|² ≤ eps·Σ_{i≤k}(θ̂ᵢ − θᵢ)²`.
pub fn residual_spread_diagnostic(theta_hat: &[f64], theta: &[f64], k: usize, eps: f64) -> bool {
    let (mut max, mut sum) = (0.0f64, 0.0);
    for i in 0..k {
        let d = theta_hat.get(i).copied().unwrap_or(0.0) - theta.get(i).copied().unwrap_or(0.0);
        max = max.max(d * d);
        sum += d * d;
    }
    if sum == 0.0 {
        return max == 0.0;
    }
    max <= eps * sum
}
