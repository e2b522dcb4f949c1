//! Parameter spaces, the Gaussian sequence model and the randomization split.

use rand::Rng;
use rand_distr::{Distribution, Exp1, StandardNormal, StudentT};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::normal;
use crate::rng::{stream_rng, STREAM_NOISE, STREAM_SPLIT};

/// Ceiling that forgives floating-point noise: `1024^0.4` evaluates to
/// `16.000000000000004` and must round to 16.
pub(crate) fn ceil_tol(x: f64) -> f64 {
    let r = x.round();
    if (x - r).abs() <= 1e-9 * x.abs().max(1.0) {
        r
    } else {
        x.ceil()
    }
}

/// Sobolev ellipsoid `{θ : Σ θᵢ² i^{2β} ≤ L²}`, optionally restricted to the
/// first `finite_dim` coordinates.
///
/// An infinite radius describes the unrestricted space (`ℝⁿ` when a finite
/// dimension is attached).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Ellipsoid {
    beta: f64,
    radius: f64,
    finite_dim: Option<usize>,
}

impl Ellipsoid {
    pub fn new(beta: f64, radius: f64) -> Result<Self> {
        if !(beta > 0.0 && beta.is_finite()) {
            return invalid(format!("regularity must be positive and finite, got {beta}"));
        }
        if !(radius > 0.0) {
            return invalid(format!("ellipsoid radius must be positive, got {radius}"));
        }
        Ok(Self {
            beta,
            radius,
            finite_dim: None,
        })
    }

    /// The ellipsoid intersected with `ℝ^dim` (finite sequence model).
    pub fn finite(beta: f64, radius: f64, dim: usize) -> Result<Self> {
        if dim == 0 {
            return invalid("finite dimension must be at least 1");
        }
        let mut e = Self::new(beta, radius)?;
        e.finite_dim = Some(dim);
        Ok(e)
    }

    /// All of `ℝ^dim`.
    pub fn euclidean(dim: usize) -> Result<Self> {
        Self::finite(1.0, f64::INFINITY, dim)
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn finite_dim(&self) -> Option<usize> {
        self.finite_dim
    }

    pub fn is_bounded(&self) -> bool {
        self.radius.is_finite()
    }

    /// `Σ θᵢ² i^{2β}`.
    pub fn energy(&self, theta: &[f64]) -> f64 {
        theta
            .iter()
            .enumerate()
            .map(|(i, t)| t * t * ((i + 1) as f64).powf(2.0 * self.beta))
            .sum()
    }

    pub fn contains(&self, theta: &[f64]) -> bool {
        if let Some(dim) = self.finite_dim {
            if theta.iter().skip(dim).any(|&t| t != 0.0) {
                return false;
            }
        }
        if !self.is_bounded() {
            return theta.iter().all(|t| t.is_finite());
        }
        // relative slack for rounding in boundary constructions
        self.energy(theta) <= self.radius * self.radius * (1.0 + 1e-12)
    }

    /// `S(β₁, L₁) ⊂ S(β, L)` whenever `β₁ ≥ β` and `L₁ ≤ L`.
    pub fn is_nested_in(&self, outer: &Ellipsoid) -> bool {
        self.beta >= outer.beta && self.radius <= outer.radius
    }

    /// Tail bound `sup_Θ ‖θ − Π_k θ‖ = L / k^β`, zero once `k` covers the
    /// whole finite dimension.
    pub fn tail_bias(&self, k: usize) -> f64 {
        if let Some(dim) = self.finite_dim {
            if k >= dim {
                return 0.0;
            }
        }
        self.radius / (k as f64).powf(self.beta)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ErrorFamily {
    StandardNormal,
    /// `Exp(1) − 1`.
    CenteredExponential,
    /// Uniform on `[−√3, √3]`.
    ScaledUniform,
    /// Student t with 5 degrees of freedom scaled to unit variance.
    ScaledStudentT5,
}

impl ErrorFamily {
    pub fn name(&self) -> &'static str {
        match self {
            ErrorFamily::StandardNormal => "standard_normal",
            ErrorFamily::CenteredExponential => "centered_exponential",
            ErrorFamily::ScaledUniform => "scaled_uniform",
            ErrorFamily::ScaledStudentT5 => "scaled_student_t5",
        }
    }

    /// `(var(ε²), cov(ε², ε))`.
    pub fn moments(&self) -> (f64, f64) {
        match self {
            ErrorFamily::StandardNormal => (2.0, 0.0),
            ErrorFamily::CenteredExponential => (8.0, 2.0),
            ErrorFamily::ScaledUniform => (0.8, 0.0),
            ErrorFamily::ScaledStudentT5 => (8.0, 0.0),
        }
    }
}

impl std::str::FromStr for ErrorFamily {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "normal" | "standard_normal" | "gaussian" => Ok(ErrorFamily::StandardNormal),
            "exponential" | "centered_exponential" => Ok(ErrorFamily::CenteredExponential),
            "uniform" | "scaled_uniform" => Ok(ErrorFamily::ScaledUniform),
            "t5" | "student_t5" | "scaled_student_t5" => Ok(ErrorFamily::ScaledStudentT5),
            other => invalid(format!("unknown error family '{other}'")),
        }
    }
}

/// Standardized error law: mean 0, variance 1, finite fourth moment.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ErrorDistribution {
    family: ErrorFamily,
    moments: Option<(f64, f64)>,
}

impl ErrorDistribution {
    pub fn new(family: ErrorFamily) -> Self {
        Self {
            family,
            moments: Some(family.moments()),
        }
    }

    pub fn standard_normal() -> Self {
        Self::new(ErrorFamily::StandardNormal)
    }

    /// Same sampler, moment metadata withheld.
    pub fn without_moments(family: ErrorFamily) -> Self {
        Self {
            family,
            moments: None,
        }
    }

    pub fn family(&self) -> ErrorFamily {
        self.family
    }

    pub fn is_gaussian(&self) -> bool {
        self.family == ErrorFamily::StandardNormal
    }

    pub fn var_eps2(&self) -> Option<f64> {
        self.moments.map(|m| m.0)
    }

    pub fn cov_eps2_eps(&self) -> Option<f64> {
        self.moments.map(|m| m.1)
    }

    /// Absolute correlation between `ε²` and `ε`.
    pub fn correlation_bound(&self) -> Option<f64> {
        self.moments.map(|(v, c)| if v > 0.0 { c.abs() / v.sqrt() } else { 0.0 })
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match self.family {
            ErrorFamily::StandardNormal => rng.sample(StandardNormal),
            ErrorFamily::CenteredExponential => {
                let e: f64 = rng.sample(Exp1);
                e - 1.0
            }
            ErrorFamily::ScaledUniform => {
                let s = 3f64.sqrt();
                rng.random_range(-s..s)
            }
            ErrorFamily::ScaledStudentT5 => {
                let t = StudentT::new(5.0).expect("valid degrees of freedom");
                t.sample(rng) * (3.0f64 / 5.0).sqrt()
            }
        }
    }
}

/// Truncated observation `(X₁, …, X_K)` with `Xᵢ = θᵢ + √(σ²/n) εᵢ`.
#[derive(Debug, Clone, PartialEq)]
pub struct SequenceSample {
    values: Vec<f64>,
    n: usize,
    sigma2: f64,
}

impl SequenceSample {
    pub fn new(values: Vec<f64>, n: usize, sigma2: f64) -> Result<Self> {
        if values.is_empty() {
            return invalid("sequence sample needs at least one coordinate");
        }
        if n == 0 {
            return invalid("sample size must be positive");
        }
        if !(sigma2 > 0.0 && sigma2.is_finite()) {
            return invalid(format!("noise variance must be positive, got {sigma2}"));
        }
        Ok(Self { values, n, sigma2 })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn sigma2(&self) -> f64 {
        self.sigma2
    }

    /// Truncation length `K`.
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Per-coordinate noise variance `σ²/n`.
    pub fn noise_var(&self) -> f64 {
        self.sigma2 / self.n as f64
    }
}

/// Draws `Xᵢ = θᵢ + √(σ²/n) εᵢ`, `i = 1..K`, with Gaussian errors.
pub fn sample_sequence(theta: &[f64], sigma2: f64, n: usize, k: usize, seed: u64) -> Result<SequenceSample> {
    sample_sequence_with(theta, sigma2, n, k, seed, &ErrorDistribution::standard_normal())
}

pub fn sample_sequence_with(
    theta: &[f64],
    sigma2: f64,
    n: usize,
    k: usize,
    seed: u64,
    errors: &ErrorDistribution,
) -> Result<SequenceSample> {
    if k == 0 {
        return invalid("truncation length must be positive");
    }
    if n == 0 {
        return invalid("sample size must be positive");
    }
    if !(sigma2 > 0.0 && sigma2.is_finite()) {
        return invalid(format!("noise variance must be positive, got {sigma2}"));
    }
    let mut rng = stream_rng(seed, STREAM_NOISE);
    let scale = (sigma2 / n as f64).sqrt();
    let values = (0..k)
        .map(|i| theta.get(i).copied().unwrap_or(0.0) + scale * errors.sample(&mut rng))
        .collect();
    SequenceSample::new(values, n, sigma2)
}

/// Two conditionally independent copies of one Gaussian observation, each with
/// noise scale `2σ²/n`.
#[derive(Debug, Clone, PartialEq)]
pub struct SplitPair {
    /// Used for the centering estimator.
    pub first: SequenceSample,
    /// Used for the norm estimate and the radius.
    pub second: SequenceSample,
}

/// `X′ᵢ = Xᵢ + Φ⁻¹(Uᵢ)σ/√n`, `X″ᵢ = Xᵢ − Φ⁻¹(Uᵢ)σ/√n`.
pub fn split_randomize(x: &SequenceSample, seed: u64) -> SplitPair {
    let mut rng = stream_rng(seed, STREAM_SPLIT);
    let uniforms: Vec<f64> = (0..x.len())
        .map(|_| {
            // open interval (0, 1)
            loop {
                let u: f64 = rng.random();
                if u > 0.0 {
                    break u;
                }
            }
        })
        .collect();
    split_with_uniforms(x, &uniforms).expect("uniform vector has the sample's length")
}

/// The split with caller-supplied uniforms.
pub fn split_with_uniforms(x: &SequenceSample, uniforms: &[f64]) -> Result<SplitPair> {
    if uniforms.len() != x.len() {
        return invalid(format!(
            "need {} uniforms for the split, got {}",
            x.len(),
            uniforms.len()
        ));
    }
    if uniforms.iter().any(|&u| !(u > 0.0 && u < 1.0)) {
        return invalid("split uniforms must lie in the open unit interval");
    }
    let scale = x.noise_var().sqrt();
    let (first, second): (Vec<f64>, Vec<f64>) = x
        .values
        .iter()
        .zip(uniforms)
        .map(|(&xi, &u)| {
            let d = normal::inv_cdf(u) * scale;
            (xi + d, xi - d)
        })
        .unzip();
    Ok(SplitPair {
        first: SequenceSample::new(first, x.n, 2.0 * x.sigma2)?,
        second: SequenceSample::new(second, x.n, 2.0 * x.sigma2)?,
    })
}

/// Shapes of test parameters placed on the boundary of an ellipsoid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BoundaryProfile {
    /// All energy on coordinate `i` (1-based).
    SingleSpike(usize),
    /// Equal magnitudes on the first `k` coordinates.
    EqualEnergy(usize),
    /// `θᵢ ∝ ρⁱ` on the first `K` coordinates.
    Geometric(f64),
}

/// A parameter on the boundary `Σ θᵢ² i^{2β} = L²` of the (bounded) ellipsoid.
pub fn boundary_theta(model: &Ellipsoid, profile: BoundaryProfile, k: usize) -> Result<Vec<f64>> {
    if !model.is_bounded() {
        return invalid("boundary profiles need a bounded ellipsoid");
    }
    if k == 0 {
        return invalid("profile length must be positive");
    }
    let limit = model.finite_dim().map_or(k, |d| d.min(k));
    let mut theta = vec![0.0; k];
    match profile {
        BoundaryProfile::SingleSpike(i) => {
            if i == 0 || i > limit {
                return invalid(format!("spike index {i} outside 1..={limit}"));
            }
            theta[i - 1] = 1.0;
        }
        BoundaryProfile::EqualEnergy(m) => {
            if m == 0 || m > limit {
                return invalid(format!("equal-energy width {m} outside 1..={limit}"));
            }
            theta[..m].fill(1.0);
        }
        BoundaryProfile::Geometric(rho) => {
            if !(rho > 0.0 && rho < 1.0) {
                return invalid(format!("geometric ratio must lie in (0, 1), got {rho}"));
            }
            let mut v = 1.0;
            for t in theta.iter_mut().take(limit) {
                v *= rho;
                *t = v;
            }
            if theta.iter().all(|&t| t == 0.0) {
                return invalid("geometric profile underflows");
            }
        }
    }
    let scale = model.radius() / model.energy(&theta).sqrt();
    theta.iter_mut().for_each(|t| *t *= scale);
    debug_assert!(model.contains(&theta));
    Ok(theta)
}

/// `σ̂² = (n/l) Σ_{i=m+1}^{m+l} Xᵢ²`.
pub fn sigma_hat(x: &SequenceSample, m: usize, l: usize) -> Result<f64> {
    if l == 0 {
        return invalid("variance window must be nonempty");
    }
    if m + l > x.len() {
        return invalid(format!(
            "window {}..={} exceeds truncation length {}",
            m + 1,
            m + l,
            x.len()
        ));
    }
    let ss: f64 = x.values[m..m + l].iter().map(|v| v * v).sum();
    Ok(x.n as f64 / l as f64 * ss)
}

/// Default variance window `(m, l)`: `m = ⌈n^{1/(2β+1/2)}⌉`,
/// `l = ⌈n^{1/(2β+1/2)} · ln n⌉`, capped inside a finite model.
pub fn select_window(beta: f64, n: usize, finite_dim: Option<usize>) -> Result<(usize, usize)> {
    if !(beta > 0.0) {
        return invalid(format!("regularity must be positive, got {beta}"));
    }
    if n < 2 {
        return invalid("window selection needs n ≥ 2");
    }
    if finite_dim.is_some() && beta <= 0.25 {
        return Err(Error::InfeasibleWindow(format!(
            "finite model needs regularity above 1/4, got {beta}"
        )));
    }
    let rate = (n as f64).powf(1.0 / (2.0 * beta + 0.5));
    let m = ceil_tol(rate) as usize;
    let mut l = ceil_tol(rate * (n as f64).ln()) as usize;
    if let Some(dim) = finite_dim {
        if m >= dim {
            return Err(Error::InfeasibleWindow(format!(
                "window start {m} leaves no room in dimension {dim}"
            )));
        }
        l = l.min(dim - m);
    }
    Ok((m, l))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn mean_var(xs: &[f64]) -> (f64, f64) {
        let n = xs.len() as f64;
        let m = xs.iter().sum::<f64>() / n;
        let v = xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (n - 1.0);
        (m, v)
    }

    #[test]
    fn ceil_forgives_rounding() {
        assert_eq!(ceil_tol(1024f64.powf(0.4)), 16.0);
        assert_eq!(ceil_tol(9.19), 10.0);
        assert_eq!(ceil_tol(3.0), 3.0);
    }

    #[test]
    fn ellipsoid_validation() {
        assert!(Ellipsoid::new(0.0, 1.0).is_err());
        assert!(Ellipsoid::new(1.0, -1.0).is_err());
        assert!(Ellipsoid::finite(1.0, 1.0, 0).is_err());
    }

    #[test]
    fn finite_model_rejects_mass_beyond_dimension() {
        let e = Ellipsoid::finite(1.0, 10.0, 2).unwrap();
        assert!(e.contains(&[0.1, 0.1]));
        assert!(!e.contains(&[0.1, 0.1, 0.01]));
        let r = Ellipsoid::euclidean(3).unwrap();
        assert!(r.contains(&[1e6, -1e6, 5.0]));
        assert_eq!(r.tail_bias(3), 0.0);
    }

    #[test]
    fn tail_bias_formula() {
        let e = Ellipsoid::new(1.0, 1.0).unwrap();
        assert!((e.tail_bias(16) - 0.0625).abs() < 1e-15);
        let f = Ellipsoid::finite(1.0, 1.0, 16).unwrap();
        assert_eq!(f.tail_bias(16), 0.0);
    }

    #[test]
    fn sample_is_deterministic() {
        let theta = [1.0, 0.5];
        let a = sample_sequence(&theta, 1.0, 100, 5, 42).unwrap();
        let b = sample_sequence(&theta, 1.0, 100, 5, 42).unwrap();
        assert_eq!(a, b);
        let c = sample_sequence(&theta, 1.0, 100, 5, 43).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn sample_rejects_bad_arguments() {
        assert!(sample_sequence(&[], 0.0, 10, 3, 1).is_err());
        assert!(sample_sequence(&[], 1.0, 0, 3, 1).is_err());
        assert!(sample_sequence(&[], 1.0, 10, 0, 1).is_err());
    }

    #[test]
    fn sample_moments_match_model() {
        // θ ∈ S(1, 1); 10⁴ replications
        let model = Ellipsoid::new(1.0, 1.0).unwrap();
        let theta = boundary_theta(&model, BoundaryProfile::EqualEnergy(2), 3).unwrap();
        let (n, sigma2, reps) = (50usize, 2.0, 10_000usize);
        let nv = sigma2 / n as f64;
        for coord in 0..3 {
            let draws: Vec<f64> = (0..reps)
                .map(|r| sample_sequence(&theta, sigma2, n, 3, r as u64).unwrap().values()[coord])
                .collect();
            let (m, v) = mean_var(&draws);
            assert!((m - theta[coord]).abs() <= 4.0 * (nv / reps as f64).sqrt());
            assert!((v / nv - 1.0).abs() < 0.05, "variance ratio {}", v / nv);
        }
    }

    #[test]
    fn forced_median_split_copies_sample() {
        let x = SequenceSample::new(vec![0.3, -1.0, 2.0], 10, 1.5).unwrap();
        let pair = split_with_uniforms(&x, &[0.5, 0.5, 0.5]).unwrap();
        assert_eq!(pair.first.values(), x.values());
        assert_eq!(pair.second.values(), x.values());
        assert_eq!(pair.first.sigma2(), 3.0);
        assert_eq!(pair.second.sigma2(), 3.0);
    }

    #[test]
    fn split_reconstructs_source() {
        let x = sample_sequence(&[1.0, -0.2, 0.0, 0.4], 1.0, 64, 4, 9).unwrap();
        let pair = split_randomize(&x, 11);
        for i in 0..4 {
            let sum = pair.first.values()[i] + pair.second.values()[i];
            assert!((sum - 2.0 * x.values()[i]).abs() <= 1e-15 * (1.0 + x.values()[i].abs()) * 4.0);
        }
    }

    #[test]
    fn split_halves_are_uncorrelated_with_doubled_variance() {
        let (n, sigma2, reps) = (100usize, 1.0, 10_000usize);
        let theta = [0.7];
        let mut a = Vec::with_capacity(reps);
        let mut b = Vec::with_capacity(reps);
        for r in 0..reps as u64 {
            let x = sample_sequence(&theta, sigma2, n, 1, r).unwrap();
            let p = split_randomize(&x, r + 1_000_000);
            a.push(p.first.values()[0]);
            b.push(p.second.values()[0]);
        }
        let (ma, va) = mean_var(&a);
        let (mb, vb) = mean_var(&b);
        let target = 2.0 * sigma2 / n as f64;
        assert!((va / target - 1.0).abs() < 0.05);
        assert!((vb / target - 1.0).abs() < 0.05);
        let cov = a.iter().zip(&b).map(|(x, y)| (x - ma) * (y - mb)).sum::<f64>() / (reps as f64 - 1.0);
        let corr = cov / (va * vb).sqrt();
        assert!(corr.abs() < 0.02, "correlation {corr}");
    }

    #[test]
    fn boundary_profiles() {
        let model = Ellipsoid::new(1.0, 1.0).unwrap();
        let spike = boundary_theta(&model, BoundaryProfile::SingleSpike(1), 4).unwrap();
        assert_eq!(spike, vec![1.0, 0.0, 0.0, 0.0]);
        let eq = boundary_theta(&model, BoundaryProfile::EqualEnergy(2), 2).unwrap();
        let expected = 1.0 / 5f64.sqrt();
        assert!((eq[0] - expected).abs() < 1e-15 && (eq[1] - expected).abs() < 1e-15);
        let geo = boundary_theta(&model, BoundaryProfile::Geometric(0.5), 30).unwrap();
        assert!((model.energy(&geo) - 1.0).abs() < 1e-12);
        for t in [spike, eq, geo] {
            assert!(model.contains(&t));
        }
        assert!(boundary_theta(&model, BoundaryProfile::SingleSpike(5), 4).is_err());
        assert!(boundary_theta(&model, BoundaryProfile::Geometric(1.5), 4).is_err());
        let finite = Ellipsoid::finite(1.0, 1.0, 3).unwrap();
        assert!(boundary_theta(&finite, BoundaryProfile::EqualEnergy(4), 10).is_err());
    }

    #[test]
    fn sigma_hat_arithmetic() {
        let x = SequenceSample::new(vec![9.0, 0.1, -0.1, 0.2, 0.0], 100, 1.0).unwrap();
        let s = sigma_hat(&x, 1, 4).unwrap();
        assert!((s - 1.5).abs() < 1e-12);
        assert!(matches!(sigma_hat(&x, 2, 4), Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn sigma_hat_unbiased_at_zero_mean() {
        let (n, sigma2, reps) = (200usize, 1.3, 4_000usize);
        let (m, l) = (5usize, 20usize);
        let draws: Vec<f64> = (0..reps as u64)
            .map(|r| sigma_hat(&sample_sequence(&[], sigma2, n, m + l, r).unwrap(), m, l).unwrap())
            .collect();
        let (mean, var) = mean_var(&draws);
        assert!((mean - sigma2).abs() <= 3.0 * (var / reps as f64).sqrt());
    }

    #[test]
    fn sigma_hat_bias_shift() {
        // E σ̂² = σ² + (n/l) Σ_window θᵢ²
        let (n, sigma2, reps) = (100usize, 1.0, 4_000usize);
        let (m, l) = (2usize, 10usize);
        let theta: Vec<f64> = (1..=12).map(|i| 0.3 / i as f64).collect();
        let shift = n as f64 / l as f64 * theta[m..m + l].iter().map(|t| t * t).sum::<f64>();
        let draws: Vec<f64> = (0..reps as u64)
            .map(|r| sigma_hat(&sample_sequence(&theta, sigma2, n, 12, r).unwrap(), m, l).unwrap())
            .collect();
        let (mean, var) = mean_var(&draws);
        assert!((mean - sigma2 - shift).abs() <= 3.0 * (var / reps as f64).sqrt());
    }

    #[test]
    fn window_selection() {
        assert_eq!(select_window(1.0, 1024, None).unwrap(), (16, 111));
        assert_eq!(select_window(0.5, 4096, None).unwrap().0, 256);
        assert!(matches!(
            select_window(0.25, 1024, Some(1024)),
            Err(Error::InfeasibleWindow(_))
        ));
        let (m, l) = select_window(1.0, 1024, Some(100)).unwrap();
        assert_eq!((m, l), (16, 84));
    }

    #[test]
    fn nonnormal_families_are_standardized() {
        for fam in [
            ErrorFamily::CenteredExponential,
            ErrorFamily::ScaledUniform,
            ErrorFamily::ScaledStudentT5,
        ] {
            let d = ErrorDistribution::new(fam);
            let mut rng = stream_rng(5, STREAM_NOISE);
            let xs: Vec<f64> = (0..200_000).map(|_| d.sample(&mut rng)).collect();
            let (m, v) = mean_var(&xs);
            assert!(m.abs() < 0.02, "{fam:?} mean {m}");
            assert!((v - 1.0).abs() < 0.03, "{fam:?} var {v}");
        }
    }
}
