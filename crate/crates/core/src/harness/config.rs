//! Experiment configuration, read from TOML and overridable field by field.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::functional::FunctionSpec;
use crate::norm::{QuantileMode, QuantileRule};
use crate::sequence::{boundary_theta, ceil_tol, BoundaryProfile, Ellipsoid, ErrorFamily};

fn config_err<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Config(msg.into()))
}

/// Implements `Serialize`/`Deserialize` through the `FromStr`/`Display` pair.
macro_rules! string_serde {
    ($t:ty) => {
        impl Serialize for $t {
            fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
                s.collect_str(self)
            }
        }

        impl<'de> Deserialize<'de> for $t {
            fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
                let s = String::deserialize(d)?;
                s.parse().map_err(serde::de::Error::custom)
            }
        }
    };
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    Sequence,
    Density,
    Regression,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RuleKind {
    Normal,
    Chebyshev,
    Simulated,
}

impl FromStr for RuleKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "normal" => Ok(RuleKind::Normal),
            "chebyshev" => Ok(RuleKind::Chebyshev),
            "simulated" => Ok(RuleKind::Simulated),
            _ => config_err(format!("unknown quantile rule '{s}'")),
        }
    }
}

/// `known` or `estimated`, optionally with an explicit window `estimated:m,l`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SigmaChoice {
    Known,
    Estimated(Option<(usize, usize)>),
}

impl FromStr for SigmaChoice {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.split_once(':') {
            None if s == "known" => Ok(SigmaChoice::Known),
            None if s == "estimated" => Ok(SigmaChoice::Estimated(None)),
            Some(("estimated", w)) => {
                let (m, l) = w
                    .split_once(',')
                    .ok_or_else(|| Error::Config(format!("window must read m,l; got '{w}'")))?;
                let parse = |v: &str| {
                    v.trim()
                        .parse::<usize>()
                        .map_err(|_| Error::Config(format!("bad window bound '{v}'")))
                };
                Ok(SigmaChoice::Estimated(Some((parse(m)?, parse(l)?))))
            }
            _ => config_err(format!("unknown sigma source '{s}'")),
        }
    }
}

impl fmt::Display for SigmaChoice {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SigmaChoice::Known => f.write_str("known"),
            SigmaChoice::Estimated(None) => f.write_str("estimated"),
            SigmaChoice::Estimated(Some((m, l))) => write!(f, "estimated:{m},{l}"),
        }
    }
}

string_serde!(SigmaChoice);

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EstimatorChoice {
    /// Truncation at a fixed level.
    Projection(usize),
    /// Unbiased-risk truncation over every level up to the truncation length.
    Adaptive,
}

impl FromStr for EstimatorChoice {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.split_once(':') {
            None if s == "adaptive" => Ok(EstimatorChoice::Adaptive),
            Some(("projection", k)) => match k.trim().parse::<usize>() {
                Ok(k) if k > 0 => Ok(EstimatorChoice::Projection(k)),
                _ => config_err(format!("bad projection level '{k}'")),
            },
            _ => config_err(format!("unknown estimator '{s}'")),
        }
    }
}

impl fmt::Display for EstimatorChoice {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EstimatorChoice::Projection(k) => write!(f, "projection:{k}"),
            EstimatorChoice::Adaptive => f.write_str("adaptive"),
        }
    }
}

string_serde!(EstimatorChoice);

/// Test parameters, resolved against an ellipsoid at a given `n`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ProfileSpec {
    Zero,
    /// All energy on coordinate `i`.
    Spike(usize),
    /// Equal magnitudes on the first `k` coordinates.
    Equal(usize),
    /// `θᵢ ∝ ρⁱ`.
    Geometric(f64),
    /// Equal magnitudes on `⌈(L²n/(2σ²))^{1/(2β+1)}⌉` coordinates, the
    /// hardest shape to estimate at sample size `n`.
    LeastFavorable,
}

impl ProfileSpec {
    /// Length used for geometric tails.
    const GEOMETRIC_LEN: usize = 400;

    pub fn theta(&self, model: &Ellipsoid, n: usize, sigma2: f64) -> Result<Vec<f64>> {
        match *self {
            ProfileSpec::Zero => Ok(vec![0.0]),
            ProfileSpec::Spike(i) => boundary_theta(model, BoundaryProfile::SingleSpike(i), i),
            ProfileSpec::Equal(k) => boundary_theta(model, BoundaryProfile::EqualEnergy(k), k),
            ProfileSpec::Geometric(rho) => boundary_theta(model, BoundaryProfile::Geometric(rho), Self::GEOMETRIC_LEN),
            ProfileSpec::LeastFavorable => {
                let l = model.radius();
                let raw = (l * l * n as f64 / (2.0 * sigma2)).powf(1.0 / (2.0 * model.beta() + 1.0));
                let mut m = (ceil_tol(raw) as usize).max(1);
                if let Some(dim) = model.finite_dim() {
                    m = m.min(dim);
                }
                boundary_theta(model, BoundaryProfile::EqualEnergy(m), m)
            }
        }
    }
}

impl FromStr for ProfileSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::Config(format!("unknown profile '{s}'"));
        match s.split_once(':') {
            None if s == "zero" => Ok(ProfileSpec::Zero),
            None if s == "least_favorable" => Ok(ProfileSpec::LeastFavorable),
            Some(("spike", v)) => Ok(ProfileSpec::Spike(v.parse().map_err(|_| bad())?)),
            Some(("equal", v)) => Ok(ProfileSpec::Equal(v.parse().map_err(|_| bad())?)),
            Some(("geometric", v)) => Ok(ProfileSpec::Geometric(v.parse().map_err(|_| bad())?)),
            _ => Err(bad()),
        }
    }
}

impl fmt::Display for ProfileSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ProfileSpec::Zero => f.write_str("zero"),
            ProfileSpec::Spike(i) => write!(f, "spike:{i}"),
            ProfileSpec::Equal(k) => write!(f, "equal:{k}"),
            ProfileSpec::Geometric(r) => write!(f, "geometric:{r}"),
            ProfileSpec::LeastFavorable => f.write_str("least_favorable"),
        }
    }
}

string_serde!(ProfileSpec);

/// Residual `θ − θ̂` on the first `k` coordinates for normality checks.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ResidualSpec {
    Zero,
    /// Equal magnitudes with total squared norm `s2`.
    Equal(f64),
    /// All of `s2` on the first coordinate.
    Spike(f64),
}

impl ResidualSpec {
    pub fn residual(&self, k: usize) -> Vec<f64> {
        match *self {
            ResidualSpec::Zero => vec![0.0; k],
            ResidualSpec::Equal(s2) => vec![(s2 / k as f64).sqrt(); k],
            ResidualSpec::Spike(s2) => {
                let mut v = vec![0.0; k];
                v[0] = s2.sqrt();
                v
            }
        }
    }
}

impl FromStr for ResidualSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::Config(format!("unknown residual profile '{s}'"));
        let value = |v: &str| match v.parse::<f64>() {
            Ok(x) if x >= 0.0 => Ok(x),
            _ => Err(bad()),
        };
        match s.split_once(':') {
            None if s == "zero" => Ok(ResidualSpec::Zero),
            Some(("equal", v)) => Ok(ResidualSpec::Equal(value(v)?)),
            Some(("spike", v)) => Ok(ResidualSpec::Spike(value(v)?)),
            _ => Err(bad()),
        }
    }
}

impl fmt::Display for ResidualSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ResidualSpec::Zero => f.write_str("zero"),
            ResidualSpec::Equal(s) => write!(f, "equal:{s}"),
            ResidualSpec::Spike(s) => write!(f, "spike:{s}"),
        }
    }
}

string_serde!(ResidualSpec);

/// Number of nonzero coordinates in a sparse parameter.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SparsitySpec {
    Count(usize),
    /// `⌊√n⌋`.
    Sqrt,
    /// All `n` coordinates.
    Full,
}

impl SparsitySpec {
    pub fn resolve(&self, n: usize) -> usize {
        match *self {
            SparsitySpec::Count(d) => d.min(n),
            SparsitySpec::Sqrt => (n as f64).sqrt().floor() as usize,
            SparsitySpec::Full => n,
        }
    }
}

impl FromStr for SparsitySpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "sqrt" => Ok(SparsitySpec::Sqrt),
            "n" | "full" => Ok(SparsitySpec::Full),
            _ => s
                .parse()
                .map(SparsitySpec::Count)
                .map_err(|_| Error::Config(format!("unknown sparsity '{s}'"))),
        }
    }
}

impl fmt::Display for SparsitySpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SparsitySpec::Count(d) => write!(f, "{d}"),
            SparsitySpec::Sqrt => f.write_str("sqrt"),
            SparsitySpec::Full => f.write_str("n"),
        }
    }
}

string_serde!(SparsitySpec);

#[derive(Debug, Clone, PartialEq)]
struct FunctionField(FunctionSpec);

impl fmt::Display for FunctionField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.0 {
            FunctionSpec::Uniform => f.write_str("uniform"),
            FunctionSpec::CosinePerturbed { j, c } => write!(f, "cosine:{j}:{c}"),
            FunctionSpec::TrigSum(v) => {
                let parts: Vec<String> = v.iter().map(|x| x.to_string()).collect();
                write!(f, "trig:{}", parts.join(","))
            }
        }
    }
}

impl FromStr for FunctionField {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        s.parse().map(FunctionField)
    }
}

string_serde!(FunctionField);

mod function_serde {
    use super::*;

    pub fn serialize<S: serde::Serializer>(f: &FunctionSpec, s: S) -> std::result::Result<S::Ok, S::Error> {
        FunctionField(f.clone()).serialize(s)
    }

    pub fn deserialize<'de, D: serde::Deserializer<'de>>(d: D) -> std::result::Result<FunctionSpec, D::Error> {
        FunctionField::deserialize(d).map(|f| f.0)
    }
}

mod family_serde {
    use super::*;

    pub fn serialize<S: serde::Serializer>(f: &ErrorFamily, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(f.name())
    }

    pub fn deserialize<'de, D: serde::Deserializer<'de>>(d: D) -> std::result::Result<ErrorFamily, D::Error> {
        String::deserialize(d)?.parse().map_err(serde::de::Error::custom)
    }
}

/// One experiment. Every field has a default, so a config file only lists
/// what it changes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub model: ModelKind,
    /// Supermodel regularity.
    pub beta: f64,
    /// Supermodel radius.
    #[serde(rename = "L")]
    pub radius: f64,
    pub finite_dim: Option<usize>,
    /// Submodel regularity and radius (rate and duality experiments).
    pub beta1: f64,
    #[serde(rename = "L1")]
    pub radius1: f64,
    pub n_grid: Vec<usize>,
    pub alpha: f64,
    pub reps: usize,
    pub rule: RuleKind,
    /// Draws for simulated quantiles.
    pub sim_reps: usize,
    pub two_sided: bool,
    /// Noise variance used to generate sequence data.
    pub sigma2: f64,
    pub sigma: SigmaChoice,
    pub estimator: EstimatorChoice,
    /// Project the center onto the supermodel.
    pub project: bool,
    /// Conservative radius floor.
    pub floor: bool,
    #[serde(with = "family_serde")]
    pub errors: ErrorFamily,
    pub profiles: Vec<ProfileSpec>,
    /// Minimum truncation length of sequence samples.
    pub truncation: Option<usize>,
    pub seed: u64,
    pub out: Option<PathBuf>,
    pub threads: Option<usize>,
    /// Density or regression function.
    #[serde(with = "function_serde")]
    pub function: FunctionSpec,
    /// Regression noise `σ²(x) = noise_s0 + noise_s1·x`.
    pub noise_s0: f64,
    pub noise_s1: f64,
    /// Cut-offs for the normality experiment.
    pub k_grid: Vec<usize>,
    pub residuals: Vec<ResidualSpec>,
    /// Tolerance of the max-versus-sum residual diagnostic.
    pub diag_eps: f64,
    pub sparsity: Vec<SparsitySpec>,
    /// Amplitude of sparse spikes.
    pub spike: f64,
    /// Separation `ε = eps_factor × floor rate` in the duality experiment.
    pub eps_factor: f64,
    /// Far alternative sits at `far_factor × ε` from the null point.
    pub far_factor: f64,
    /// Null point of the duality experiment, resolved on the submodel.
    pub null_profile: ProfileSpec,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            model: ModelKind::Sequence,
            beta: 1.0,
            radius: 1.0,
            finite_dim: None,
            beta1: 1.0,
            radius1: 1.0,
            n_grid: vec![256, 1024, 4096],
            alpha: 0.05,
            reps: 1000,
            rule: RuleKind::Normal,
            sim_reps: 2000,
            two_sided: false,
            sigma2: 1.0,
            sigma: SigmaChoice::Known,
            estimator: EstimatorChoice::Adaptive,
            project: true,
            floor: false,
            errors: ErrorFamily::StandardNormal,
            profiles: vec![ProfileSpec::Spike(1), ProfileSpec::Equal(5), ProfileSpec::Geometric(0.5)],
            truncation: None,
            seed: 20_240_501,
            out: None,
            threads: None,
            function: FunctionSpec::CosinePerturbed { j: 1, c: 0.5 },
            noise_s0: 0.25,
            noise_s1: 0.5,
            k_grid: vec![1, 200],
            residuals: vec![ResidualSpec::Zero, ResidualSpec::Equal(0.01), ResidualSpec::Equal(1.0)],
            diag_eps: 0.05,
            sparsity: vec![SparsitySpec::Count(0), SparsitySpec::Count(1), SparsitySpec::Sqrt, SparsitySpec::Full],
            spike: 1.0,
            eps_factor: 4.0,
            far_factor: 1.05,
            null_profile: ProfileSpec::Zero,
        }
    }
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        if self.reps < 100 {
            return config_err(format!("reps must be at least 100, got {}", self.reps));
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return config_err(format!("alpha must lie in (0, 1), got {}", self.alpha));
        }
        if self.n_grid.is_empty() {
            return config_err("n_grid is empty");
        }
        if self.n_grid.windows(2).any(|w| w[0] >= w[1]) || self.n_grid[0] < 4 {
            return config_err("n_grid must be strictly ascending with entries ≥ 4");
        }
        if !(self.sigma2 > 0.0 && self.sigma2.is_finite()) {
            return config_err("sigma2 must be positive");
        }
        if self.sim_reps < 1000 && self.rule == RuleKind::Simulated {
            return config_err("sim_reps must be at least 1000");
        }
        if self.threads == Some(0) {
            return config_err("threads must be positive");
        }
        self.supermodel()?;
        self.submodel()?;
        Ok(())
    }

    pub fn supermodel(&self) -> Result<Ellipsoid> {
        let e = match self.finite_dim {
            Some(d) => Ellipsoid::finite(self.beta, self.radius, d),
            None => Ellipsoid::new(self.beta, self.radius),
        };
        e.map_err(|e| Error::Config(format!("supermodel: {e}")))
    }

    pub fn submodel(&self) -> Result<Ellipsoid> {
        let e = match self.finite_dim {
            Some(d) => Ellipsoid::finite(self.beta1, self.radius1, d),
            None => Ellipsoid::new(self.beta1, self.radius1),
        };
        e.map_err(|e| Error::Config(format!("submodel: {e}")))
    }

    pub fn quantile_rule(&self) -> Result<QuantileRule> {
        let mode = match self.rule {
            RuleKind::Normal => QuantileMode::Normal,
            RuleKind::Chebyshev => QuantileMode::Chebyshev,
            RuleKind::Simulated => QuantileMode::Simulated {
                reps: self.sim_reps,
                seed: self.seed,
                two_sided: self.two_sided,
            },
        };
        QuantileRule::new(mode, self.alpha).map_err(|e| Error::Config(e.to_string()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn toml_round_trip() {
        let cfg = ExperimentConfig {
            sigma: SigmaChoice::Estimated(Some((16, 111))),
            estimator: EstimatorChoice::Projection(12),
            ..Default::default()
        };
        let back = ExperimentConfig::from_toml(&cfg.to_toml()).unwrap();
        assert_eq!(cfg, back);
    }

    #[test]
    fn partial_file_uses_defaults() {
        let cfg = ExperimentConfig::from_toml("L = 2.0\nn_grid = [64, 128]\nprofiles = [\"spike:3\"]\n").unwrap();
        assert_eq!(cfg.radius, 2.0);
        assert_eq!(cfg.profiles, vec![ProfileSpec::Spike(3)]);
        assert_eq!(cfg.alpha, 0.05);
    }

    #[test]
    fn invalid_configs() {
        assert!(ExperimentConfig::from_toml("reps = 10").is_err());
        assert!(ExperimentConfig::from_toml("n_grid = [512, 256]").is_err());
        assert!(ExperimentConfig::from_toml("alpha = 1.5").is_err());
        assert!(ExperimentConfig::from_toml("bogus = 1").is_err());
        assert!(ExperimentConfig::from_toml("profiles = [\"wiggle\"]").is_err());
        assert!("estimated:3".parse::<SigmaChoice>().is_err());
        assert!("projection:0".parse::<EstimatorChoice>().is_err());
    }

    #[test]
    fn least_favorable_width() {
        let m = Ellipsoid::new(1.0, 1.0).unwrap();
        // (1024/2)^{1/3} = 8
        let t = ProfileSpec::LeastFavorable.theta(&m, 1024, 1.0).unwrap();
        assert_eq!(t.len(), 8);
        assert!((m.energy(&t) - 1.0).abs() < 1e-12);
    }
}
