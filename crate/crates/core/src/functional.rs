//! U-statistic estimates of `Σ_{i≤k}(θᵢ − θ̂ᵢ)²` for density estimation and
//! random-design regression on `[0, 1]` with the trigonometric basis.

use std::f64::consts::SQRT_2;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::basis::{fill_trig, trig};
use crate::error::{invalid, Error, Result};
use crate::norm::NormEstimate;
use crate::numeric::CompensatedSum;
use crate::rng::{stream_rng, STREAM_DESIGN, STREAM_NOISE};
use crate::sequence::{ErrorDistribution, ErrorFamily};

/// Functions with finitely many nonzero trigonometric coefficients.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FunctionSpec {
    /// The uniform density, `f ≡ 1`.
    Uniform,
    /// `1 + c·√2 cos(2πjx)`, i.e. coefficient `c` on `e_{2j}`.
    CosinePerturbed { j: usize, c: f64 },
    /// `Σ θᵢ eᵢ` with the listed coefficients.
    TrigSum(Vec<f64>),
}

impl FunctionSpec {
    /// Nonzero prefix of the coefficient sequence.
    fn coefficients(&self) -> Vec<f64> {
        match self {
            FunctionSpec::Uniform => vec![1.0],
            FunctionSpec::CosinePerturbed { j, c } => {
                let mut v = vec![0.0; 2 * j];
                v[0] = 1.0;
                v[2 * j - 1] = *c;
                v
            }
            FunctionSpec::TrigSum(v) => v.clone(),
        }
    }

    fn validate(&self) -> Result<()> {
        match self {
            FunctionSpec::CosinePerturbed { j, c } => {
                if *j == 0 {
                    return invalid("cosine frequency must be at least 1");
                }
                if !c.is_finite() {
                    return invalid("cosine amplitude must be finite");
                }
            }
            FunctionSpec::TrigSum(v) => {
                if v.is_empty() || v.iter().any(|t| !t.is_finite()) {
                    return invalid("trigonometric sum needs finite coefficients");
                }
            }
            FunctionSpec::Uniform => {}
        }
        Ok(())
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.coefficients()
            .iter()
            .enumerate()
            .map(|(i, t)| t * trig(i + 1, x))
            .sum()
    }

    /// `|θ₁| + √2 Σ_{i>1}|θᵢ|`, a bound on `‖f‖_∞`.
    pub fn sup_bound(&self) -> f64 {
        let c = self.coefficients();
        c[0].abs() + SQRT_2 * c[1..].iter().map(|t| t.abs()).sum::<f64>()
    }

    /// A valid density: unit mass and `θ₁ − √2 Σ_{i>1}|θᵢ| ≥ 0`.
    fn check_density(&self) -> Result<()> {
        self.validate()?;
        let c = self.coefficients();
        if c[0] != 1.0 {
            return invalid(format!("density must integrate to 1, first coefficient is {}", c[0]));
        }
        let lower = 1.0 - SQRT_2 * c[1..].iter().map(|t| t.abs()).sum::<f64>();
        if lower < 0.0 {
            return invalid("catalog density may be negative");
        }
        Ok(())
    }
}

impl std::str::FromStr for FunctionSpec {
    type Err = Error;

    /// `uniform`, `cosine:<j>:<c>` or `trig:<θ₁>,<θ₂>,…`.
    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::InvalidArgument(format!("unknown function spec '{s}'"));
        let mut parts = s.splitn(2, ':');
        let spec = match (parts.next(), parts.next()) {
            (Some("uniform"), None) => FunctionSpec::Uniform,
            (Some("cosine"), Some(rest)) => {
                let (j, c) = rest.split_once(':').ok_or_else(bad)?;
                FunctionSpec::CosinePerturbed {
                    j: j.trim().parse().map_err(|_| bad())?,
                    c: c.trim().parse().map_err(|_| bad())?,
                }
            }
            (Some("trig"), Some(rest)) => FunctionSpec::TrigSum(
                rest.split(',')
                    .map(|t| t.trim().parse::<f64>().map_err(|_| bad()))
                    .collect::<Result<_>>()?,
            ),
            _ => return Err(bad()),
        };
        spec.validate()?;
        Ok(spec)
    }
}

/// First `k` coefficients `θᵢ = ⟨f, eᵢ⟩`.
pub fn true_coeffs(spec: &FunctionSpec, k: usize) -> Result<Vec<f64>> {
    spec.validate()?;
    let mut c = spec.coefficients();
    c.resize(k, 0.0);
    Ok(c)
}

/// I.i.d. observations from a density on `[0, 1]` with a known sup bound.
#[derive(Debug, Clone, PartialEq)]
pub struct DensitySample {
    points: Vec<f64>,
    f_sup: f64,
}

impl DensitySample {
    pub fn new(points: Vec<f64>, f_sup: f64) -> Result<Self> {
        if points.len() < 2 {
            return invalid("density sample needs n ≥ 2");
        }
        if !(f_sup >= 1.0 && f_sup.is_finite()) {
            return invalid(format!("density sup bound must be at least 1, got {f_sup}"));
        }
        if points.iter().any(|x| !(0.0..=1.0).contains(x)) {
            return invalid("density sample points must lie in [0, 1]");
        }
        Ok(Self { points, f_sup })
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn f_sup(&self) -> f64 {
        self.f_sup
    }

    pub fn n(&self) -> usize {
        self.points.len()
    }

    /// First and second halves, for sample splitting.
    pub fn split_halves(&self) -> Result<(Self, Self)> {
        let h = self.n() / 2;
        Ok((
            Self::new(self.points[..h].to_vec(), self.f_sup)?,
            Self::new(self.points[h..].to_vec(), self.f_sup)?,
        ))
    }
}

/// Pairs `(Xᵢ, Yᵢ)` with `X` uniform on `[0, 1]` and `E(Y | X) = f(X)`.
#[derive(Debug, Clone, PartialEq)]
pub struct RegressionSample {
    x: Vec<f64>,
    y: Vec<f64>,
    f_sup: f64,
    sigma2_sup: f64,
}

impl RegressionSample {
    pub fn new(x: Vec<f64>, y: Vec<f64>, f_sup: f64, sigma2_sup: f64) -> Result<Self> {
        if x.len() != y.len() {
            return invalid("design and responses differ in length");
        }
        if x.len() < 2 {
            return invalid("regression sample needs n ≥ 2");
        }
        if !(f_sup > 0.0 && sigma2_sup > 0.0 && f_sup.is_finite() && sigma2_sup.is_finite()) {
            return invalid("regression bounds must be positive and finite");
        }
        if x.iter().any(|v| !(0.0..=1.0).contains(v)) {
            return invalid("design points must lie in [0, 1]");
        }
        Ok(Self { x, y, f_sup, sigma2_sup })
    }

    pub fn x(&self) -> &[f64] {
        &self.x
    }

    pub fn y(&self) -> &[f64] {
        &self.y
    }

    pub fn f_sup(&self) -> f64 {
        self.f_sup
    }

    pub fn sigma2_sup(&self) -> f64 {
        self.sigma2_sup
    }

    pub fn n(&self) -> usize {
        self.x.len()
    }

    pub fn split_halves(&self) -> Result<(Self, Self)> {
        let h = self.n() / 2;
        Ok((
            Self::new(self.x[..h].to_vec(), self.y[..h].to_vec(), self.f_sup, self.sigma2_sup)?,
            Self::new(self.x[h..].to_vec(), self.y[h..].to_vec(), self.f_sup, self.sigma2_sup)?,
        ))
    }
}

/// Noise `ε = √σ²(X)·η` with `σ²(x) = s0 + s1·x` and `η` standardized.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseSpec {
    pub s0: f64,
    pub s1: f64,
    pub family: ErrorFamily,
}

impl NoiseSpec {
    pub fn homoscedastic(sigma2: f64) -> Self {
        Self {
            s0: sigma2,
            s1: 0.0,
            family: ErrorFamily::StandardNormal,
        }
    }

    pub fn linear(s0: f64, s1: f64) -> Self {
        Self {
            s0,
            s1,
            family: ErrorFamily::StandardNormal,
        }
    }

    pub fn variance(&self, x: f64) -> f64 {
        self.s0 + self.s1 * x
    }

    pub fn sup(&self) -> f64 {
        self.s0.max(self.s0 + self.s1)
    }

    fn validate(&self) -> Result<()> {
        if !(self.s0 > 0.0 && self.s0 + self.s1 > 0.0) || !self.s1.is_finite() {
            return invalid("noise variance must be positive on [0, 1]");
        }
        Ok(())
    }
}

/// Rejection sampling against the uniform envelope of height `sup_bound`.
pub fn sample_density(spec: &FunctionSpec, n: usize, seed: u64) -> Result<DensitySample> {
    spec.check_density()?;
    if n < 2 {
        return invalid("density sample needs n ≥ 2");
    }
    let m = spec.sup_bound();
    if 1.0 / m < 0.01 {
        return invalid(format!("rejection efficiency {:.4} below 1%", 1.0 / m));
    }
    let coeffs = spec.coefficients();
    let mut basis = vec![0.0; coeffs.len()];
    let mut rng = stream_rng(seed, STREAM_DESIGN);
    let mut points = Vec::with_capacity(n);
    while points.len() < n {
        let x: f64 = rng.random();
        let u: f64 = rng.random();
        fill_trig(x, &mut basis);
        let fx: f64 = coeffs.iter().zip(&basis).map(|(t, e)| t * e).sum();
        if u * m <= fx {
            points.push(x);
        }
    }
    DensitySample::new(points, m.max(1.0))
}

pub fn sample_regression(spec: &FunctionSpec, noise: &NoiseSpec, n: usize, seed: u64) -> Result<RegressionSample> {
    spec.validate()?;
    noise.validate()?;
    if n < 2 {
        return invalid("regression sample needs n ≥ 2");
    }
    let coeffs = spec.coefficients();
    let mut basis = vec![0.0; coeffs.len()];
    let mut design = stream_rng(seed, STREAM_DESIGN);
    let mut errs = stream_rng(seed, STREAM_NOISE);
    let dist = ErrorDistribution::new(noise.family);
    let mut x = Vec::with_capacity(n);
    let mut y = Vec::with_capacity(n);
    for _ in 0..n {
        let xi: f64 = design.random();
        fill_trig(xi, &mut basis);
        let fx: f64 = coeffs.iter().zip(&basis).map(|(t, e)| t * e).sum();
        x.push(xi);
        y.push(fx + noise.variance(xi).sqrt() * dist.sample(&mut errs));
    }
    RegressionSample::new(x, y, spec.sup_bound().max(f64::MIN_POSITIVE), noise.sup())
}

/// `(1/(n(n−1))) Σᵢ [(Σ_r a_ir)² − Σ_r a_ir²]` where `row(r, buf)` writes
/// `a_{1r}, …, a_{kr}` into `buf`.
fn u_statistic<F: FnMut(usize, &mut [f64])>(n: usize, k: usize, mut row: F) -> f64 {
    let mut s1 = vec![CompensatedSum::new(); k];
    let mut s2 = vec![CompensatedSum::new(); k];
    let mut buf = vec![0.0; k];
    for r in 0..n {
        row(r, &mut buf);
        for i in 0..k {
            s1[i].add(buf[i]);
            s2[i].add(buf[i] * buf[i]);
        }
    }
    let mut total = CompensatedSum::new();
    for i in 0..k {
        let t = s1[i].value();
        total.add(t * t);
        total.add(-s2[i].value());
    }
    total.value() / (n as f64 * (n as f64 - 1.0))
}

fn check_k(k: usize) -> Result<()> {
    if k == 0 {
        invalid("cut-off must be at least 1")
    } else {
        Ok(())
    }
}

/// Density U-statistic with `a_ir = eᵢ(X_r) − θ̂ᵢ`.
pub fn density_r_kn(data: &DensitySample, theta_hat: &[f64], k: usize) -> Result<NormEstimate> {
    check_k(k)?;
    let n = data.n();
    let hat: Vec<f64> = (0..k).map(|i| theta_hat.get(i).copied().unwrap_or(0.0)).collect();
    let r = u_statistic(n, k, |row, buf| {
        fill_trig(data.points[row], buf);
        buf.iter_mut().zip(&hat).for_each(|(v, h)| *v -= h);
    });
    let nf = n as f64;
    let f = data.f_sup;
    Ok(NormEstimate {
        r,
        a: 2.0 * k as f64 * f * f / (nf * (nf - 1.0)),
        b: 4.0 * f / nf,
        c: 0.0,
        c0: 0.0,
        k,
        n,
    })
}

/// Regression U-statistic with `a_ir = Y_r eᵢ(X_r) − θ̂ᵢ`.
pub fn regression_r_kn(data: &RegressionSample, theta_hat: &[f64], k: usize) -> Result<NormEstimate> {
    check_k(k)?;
    let n = data.n();
    let hat: Vec<f64> = (0..k).map(|i| theta_hat.get(i).copied().unwrap_or(0.0)).collect();
    let r = u_statistic(n, k, |row, buf| {
        fill_trig(data.x[row], buf);
        let y = data.y[row];
        buf.iter_mut().zip(&hat).for_each(|(v, h)| *v = y * *v - h);
    });
    let nf = n as f64;
    let m = data.f_sup * data.f_sup + data.sigma2_sup;
    Ok(NormEstimate {
        r,
        a: 2.0 * k as f64 * m * m / (nf * (nf - 1.0)),
        b: 4.0 * m / nf,
        c: 0.0,
        c0: 0.0,
        k,
        n,
    })
}

/// Per-coordinate sample means and variances of the mean of `eᵢ(X)` (density)
/// or `Y·eᵢ(X)` (regression), for `i ≤ k`.
#[derive(Debug, Clone, PartialEq)]
pub struct CoefficientMoments {
    pub means: Vec<f64>,
    /// Estimated variance of each mean.
    pub mean_vars: Vec<f64>,
}

fn moments<F: FnMut(usize, &mut [f64])>(n: usize, k: usize, mut row: F) -> CoefficientMoments {
    let mut s1 = vec![0.0; k];
    let mut s2 = vec![0.0; k];
    let mut buf = vec![0.0; k];
    for r in 0..n {
        row(r, &mut buf);
        for i in 0..k {
            s1[i] += buf[i];
            s2[i] += buf[i] * buf[i];
        }
    }
    let nf = n as f64;
    let means: Vec<f64> = s1.iter().map(|s| s / nf).collect();
    let mean_vars = s2
        .iter()
        .zip(&means)
        .map(|(q, m)| ((q - nf * m * m) / (nf - 1.0)).max(0.0) / nf)
        .collect();
    CoefficientMoments { means, mean_vars }
}

pub fn density_moments(data: &DensitySample, k: usize) -> Result<CoefficientMoments> {
    check_k(k)?;
    Ok(moments(data.n(), k, |r, buf| fill_trig(data.points[r], buf)))
}

pub fn regression_moments(data: &RegressionSample, k: usize) -> Result<CoefficientMoments> {
    check_k(k)?;
    Ok(moments(data.n(), k, |r, buf| {
        fill_trig(data.x[r], buf);
        let y = data.y[r];
        buf.iter_mut().for_each(|v| *v *= y);
    }))
}

/// Hoeffding decomposition `R = Eh + L + D` of the density U-statistic at
/// the true coefficients `θ`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HoeffdingParts {
    /// `Σ_{i≤k}(θᵢ − θ̂ᵢ)²`.
    pub mean: f64,
    /// `(1/n) Σ_r P₁h(X_r)`, `P₁h(x) = 2Σ(θᵢ − θ̂ᵢ)(eᵢ(x) − θᵢ)`.
    pub linear: f64,
    /// U-statistic of the degenerate kernel `Σ(eᵢ(x) − θᵢ)(eᵢ(y) − θᵢ)`.
    pub degenerate: f64,
}

impl HoeffdingParts {
    pub fn total(&self) -> f64 {
        self.mean + self.linear + self.degenerate
    }
}

pub fn hoeffding_parts(data: &DensitySample, theta: &[f64], theta_hat: &[f64], k: usize) -> Result<HoeffdingParts> {
    check_k(k)?;
    let n = data.n();
    let th: Vec<f64> = (0..k).map(|i| theta.get(i).copied().unwrap_or(0.0)).collect();
    let d: Vec<f64> = (0..k)
        .map(|i| th[i] - theta_hat.get(i).copied().unwrap_or(0.0))
        .collect();
    let mut lin = CompensatedSum::new();
    let mut buf = vec![0.0; k];
    for &x in &data.points {
        fill_trig(x, &mut buf);
        lin.add(2.0 * buf.iter().zip(&th).zip(&d).map(|((e, t), di)| di * (e - t)).sum::<f64>());
    }
    let degenerate = u_statistic(n, k, |row, buf| {
        fill_trig(data.points[row], buf);
        buf.iter_mut().zip(&th).for_each(|(v, t)| *v -= t);
    });
    Ok(HoeffdingParts {
        mean: d.iter().map(|v| v * v).sum(),
        linear: lin.value() / n as f64,
        degenerate,
    })
}
