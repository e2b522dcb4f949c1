//! Honest confidence balls: cut-off, bias bound, radius and membership.

use crate::error::{invalid, Error, Result};
use crate::functional::{density_r_kn, regression_r_kn, DensitySample, RegressionSample};
use crate::norm::{quantile, sequence_r_kn, truncated_residual, NormEstimate, QuantileMode, QuantileRule, SimulationContext};
use crate::numeric::bisect;
use crate::sequence::{ceil_tol, sigma_hat, Ellipsoid, ErrorDistribution, SequenceSample};

const RADIUS_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CutoffPlan {
    pub k: usize,
    /// `B_k = L/k^β`, zero when `k` spans a finite model.
    pub bias: f64,
    pub beta: f64,
    pub radius: f64,
}

/// `k = max(1, ⌈L^{4/(4β+1)} n^{1/(2β+1/2)}⌉)`, capped by a finite dimension.
/// An unbounded finite model uses its full dimension.
pub fn cutoff(model: &Ellipsoid, n: usize) -> Result<CutoffPlan> {
    if n == 0 {
        return invalid("sample size must be positive");
    }
    let beta = model.beta();
    if let Some(dim) = model.finite_dim() {
        if beta < 0.25 {
            return Err(Error::InfeasibleCutoff(format!(
                "regularity {beta} below 1/4 cannot keep k within dimension {dim}"
            )));
        }
        if !model.is_bounded() {
            return cutoff_at(model, dim);
        }
    } else if !model.is_bounded() {
        return Err(Error::InfeasibleCutoff("unbounded infinite-dimensional model".into()));
    }
    let raw = model.radius().powf(4.0 / (4.0 * beta + 1.0)) * (n as f64).powf(1.0 / (2.0 * beta + 0.5));
    if !raw.is_finite() || raw > 1e12 {
        return Err(Error::InfeasibleCutoff(format!("cut-off {raw} too large")));
    }
    let mut k = (ceil_tol(raw) as usize).max(1);
    if let Some(dim) = model.finite_dim() {
        k = k.min(dim);
    }
    cutoff_at(model, k)
}

/// Plan for an explicitly chosen cut-off.
pub fn cutoff_at(model: &Ellipsoid, k: usize) -> Result<CutoffPlan> {
    if k == 0 {
        return invalid("cut-off must be at least 1");
    }
    if let Some(dim) = model.finite_dim() {
        if k > dim {
            return invalid(format!("cut-off {k} exceeds dimension {dim}"));
        }
    }
    Ok(CutoffPlan {
        k,
        bias: model.tail_bias(k),
        beta: model.beta(),
        radius: model.radius(),
    })
}

/// `B′ = √(max(z√a, 0) + max(r̂, 0)) + 2B` and `A = √z·b^{1/4}`.
fn envelope_terms(r: f64, a: f64, b: f64, z: f64, bias: f64) -> (f64, f64) {
    let bp = ((z * a.sqrt()).max(0.0) + r.max(0.0)).sqrt() + 2.0 * bias;
    let aa = z.max(0.0).sqrt() * b.sqrt().sqrt();
    (aa, bp)
}

/// `((A + √(A² + 4B′))/2)²`, an upper bound for the radius.
pub fn radius_envelope(r: f64, a: f64, b: f64, z: f64, bias: f64) -> f64 {
    let (aa, bp) = envelope_terms(r, a, b, z, bias);
    let y = 0.5 * (aa + (aa * aa + 4.0 * bp).sqrt());
    y * y
}

/// `2B′ + 2A²`, the coarser closed-form bound.
pub fn radius_envelope_coarse(r: f64, a: f64, b: f64, z: f64, bias: f64) -> f64 {
    let (aa, bp) = envelope_terms(r, a, b, z, bias);
    2.0 * bp + 2.0 * aa * aa
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RadiusSolution {
    pub radius: f64,
    pub floor_applied: bool,
}

/// Largest `x ≥ 0` with `x ≤ √(max(z√(a + b·x²) + r, 0)) + 2B`.
///
/// For `x ≥ 2B` the condition reads `F(x) = (x − 2B)² − z√(a + bx²) − r ≤ 0`.
/// `F′` is convex and nonpositive at `2B`, so `F` falls then rises; the answer
/// is the upper root of `F` or `2B` when `F` stays positive.
pub fn solve_radius_components(r: f64, a: f64, b: f64, z: f64, bias: f64, floor: bool) -> RadiusSolution {
    let two_b = 2.0 * bias.max(0.0);
    let z = z.max(0.0);
    let f = |x: f64| (x - two_b).powi(2) - z * (a + b * x * x).sqrt() - r;
    let df = |x: f64| 2.0 * (x - two_b) - z * b * x / (a + b * x * x).sqrt().max(f64::MIN_POSITIVE);
    let env = radius_envelope(r, a, b, z, bias).max(two_b);
    let x_min = if df(two_b) >= 0.0 {
        two_b
    } else if df(env) < 0.0 {
        env
    } else {
        bisect(|x| df(x) >= 0.0, two_b, env, RADIUS_TOL).1
    };
    let mut radius = if f(x_min) > 0.0 {
        two_b
    } else if f(env) <= 0.0 {
        env
    } else {
        bisect(|x| f(x) > 0.0, x_min, env, RADIUS_TOL).0
    };
    let mut floor_applied = false;
    if floor {
        let fl = (z * a.sqrt()).sqrt();
        if fl > radius {
            radius = fl;
            floor_applied = true;
        }
    }
    RadiusSolution { radius, floor_applied }
}

/// Enclosing radius of the set `{θ : ‖θ − θ̂‖ ≤ √(zτ̂ + r̂) + 2B}`, using the
/// inflated scale `(1 + c0)(a + b·x²)` when the errors are skewed.
pub fn solve_radius(est: &NormEstimate, z: f64, bias: f64, floor: bool) -> f64 {
    let (a, b) = est.inflated();
    let mut sol = solve_radius_components(est.r, a, b, z, bias, false);
    if floor {
        sol.radius = sol.radius.max((z * est.a.sqrt()).sqrt());
    }
    sol.radius
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConfidenceBall {
    pub center: Vec<f64>,
    pub radius: f64,
    pub k: usize,
    pub bias: f64,
    pub z: f64,
    pub estimate: NormEstimate,
    pub model: Ellipsoid,
    pub floor_applied: bool,
    /// Noise level used in the norm estimate (known or estimated).
    pub sigma2: Option<f64>,
}

/// Observations for the radius, independent of the center.
#[derive(Debug, Clone, Copy)]
pub enum Observations<'a> {
    Sequence(&'a SequenceSample),
    Density(&'a DensitySample),
    Regression(&'a RegressionSample),
}

impl Observations<'_> {
    fn n(&self) -> usize {
        match self {
            Observations::Sequence(x) => x.n(),
            Observations::Density(d) => d.n(),
            Observations::Regression(d) => d.n(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SigmaSource {
    /// The noise level recorded with the sample.
    Known,
    /// `σ̂²` from coordinates `m+1..=m+l` of the sample.
    Estimated { m: usize, l: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub struct BallSettings {
    pub rule: QuantileRule,
    pub sigma: SigmaSource,
    /// Conservative floor `√(z·τ̂(0))`.
    pub floor: bool,
    /// Error law used for the variance components (sequence model).
    pub errors: ErrorDistribution,
    /// Explicit cut-off instead of the rate-optimal one.
    pub k: Option<usize>,
    /// Reference parameter for simulated quantiles; the center when absent.
    pub theta_ref: Option<Vec<f64>>,
}

impl BallSettings {
    pub fn new(rule: QuantileRule) -> Self {
        Self {
            rule,
            sigma: SigmaSource::Known,
            floor: false,
            errors: ErrorDistribution::standard_normal(),
            k: None,
            theta_ref: None,
        }
    }
}

pub fn build_ball(
    obs: Observations<'_>,
    theta_hat: &[f64],
    model: &Ellipsoid,
    settings: &BallSettings,
) -> Result<ConfidenceBall> {
    let plan = match settings.k {
        Some(k) => cutoff_at(model, k)?,
        None => cutoff(model, obs.n())?,
    };
    let k = plan.k;
    let (estimate, sigma2) = match obs {
        Observations::Sequence(x) => {
            if k > x.len() {
                return invalid(format!("cut-off {k} exceeds truncation length {}", x.len()));
            }
            let s2 = match settings.sigma {
                SigmaSource::Known => x.sigma2(),
                SigmaSource::Estimated { m, l } => {
                    let s = sigma_hat(x, m, l)?;
                    if !(s > 0.0 && s.is_finite()) {
                        return Err(Error::Numerical(format!("estimated noise variance {s}")));
                    }
                    s
                }
            };
            (sequence_r_kn(x, theta_hat, k, s2, &settings.errors)?, Some(s2))
        }
        Observations::Density(d) => {
            reject_estimated(settings.sigma)?;
            (density_r_kn(d, theta_hat, k)?, None)
        }
        Observations::Regression(d) => {
            reject_estimated(settings.sigma)?;
            (regression_r_kn(d, theta_hat, k)?, None)
        }
    };
    let z = match (&settings.rule.mode, obs, sigma2) {
        (QuantileMode::Simulated { .. }, Observations::Sequence(_), Some(s2)) => {
            let theta_ref = settings.theta_ref.as_deref().unwrap_or(theta_hat);
            let ctx = SimulationContext {
                theta_ref,
                theta_hat,
                k,
                n: obs.n(),
                sigma2: s2,
                errors: settings.errors,
            };
            quantile(&settings.rule, Some(&ctx))?
        }
        (QuantileMode::Simulated { .. }, _, _) => {
            return invalid("simulated quantiles are available for the sequence model only");
        }
        _ => quantile(&settings.rule, None)?,
    };
    let (a, b) = estimate.inflated();
    let sol = solve_radius_components(estimate.r, a, b, z, plan.bias, false);
    let (mut radius, mut floor_applied) = (sol.radius, false);
    if settings.floor {
        let fl = (z * estimate.a.sqrt()).sqrt();
        if fl > radius {
            radius = fl;
            floor_applied = true;
        }
    }
    if !radius.is_finite() {
        return Err(Error::Numerical(format!("radius {radius}")));
    }
    Ok(ConfidenceBall {
        center: theta_hat.to_vec(),
        radius,
        k,
        bias: plan.bias,
        z,
        estimate,
        model: *model,
        floor_applied,
        sigma2,
    })
}

fn reject_estimated(sigma: SigmaSource) -> Result<()> {
    match sigma {
        SigmaSource::Known => Ok(()),
        SigmaSource::Estimated { .. } => invalid("estimated noise variance applies to the sequence model only"),
    }
}

/// `‖θ − θ̂‖ ≤ √(max(z·τ̂(s², s₁) + r̂, 0)) + 2B_k` and `θ ∈ Θ`.
pub fn contains(ball: &ConfidenceBall, theta: &[f64]) -> bool {
    if !ball.model.contains(theta) {
        return false;
    }
    let len = theta.len().max(ball.center.len());
    let dist2: f64 = (0..len)
        .map(|i| {
            let d = theta.get(i).copied().unwrap_or(0.0) - ball.center.get(i).copied().unwrap_or(0.0);
            d * d
        })
        .sum();
    let (s2, s1) = truncated_residual(theta, &ball.center, ball.k);
    let tau = ball.estimate.tau(s2, s1);
    let slack = ball.z * tau + ball.estimate.r;
    // a negative slack rejects every θ with this residual, the center included
    slack >= 0.0 && dist2.sqrt() <= slack.sqrt() + 2.0 * ball.bias
}

/// Diameter of the enclosing ball.
pub fn diameter(ball: &ConfidenceBall) -> f64 {
    2.0 * ball.radius
}
