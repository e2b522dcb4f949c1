//! Monte Carlo experiments and their reports.

use rayon::prelude::*;

use crate::ball::{contains, diameter};
use crate::duality::{check_nesting, confset_to_test, floor_rate, TestProblem};
use crate::error::{Error, Result};
use crate::estimators::residual_spread_diagnostic;
use crate::functional::{
    density_r_kn, regression_r_kn, sample_density, sample_regression, true_coeffs, NoiseSpec,
};
use crate::norm::{sequence_r_kn, truncated_residual};
use crate::rng::derive_seed;
use crate::sequence::{sample_sequence_with, Ellipsoid, ErrorDistribution};

use super::config::{ExperimentConfig, ModelKind, ProfileSpec};
use super::report::{f, u, Table};
use super::sim::{distance, Cell};
use super::stats::{binomial_se, ks_normal, loglog_slope, mean, median, variance};

const TAG_COVERAGE: u64 = 1;
const TAG_RATES: u64 = 2;
const TAG_NORMALITY: u64 = 3;
const TAG_SPARSE: u64 = 4;
const TAG_DUALITY: u64 = 5;

/// Runs `job` on a pool of `threads` workers, or on the global pool.
pub fn with_threads<T: Send>(threads: Option<usize>, job: impl FnOnce() -> T + Send) -> Result<T> {
    match threads {
        None => Ok(job()),
        Some(t) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(t)
                .build()
                .map_err(|e| Error::Numerical(format!("thread pool: {e}")))?;
            Ok(pool.install(job))
        }
    }
}

fn model_name(m: ModelKind) -> &'static str {
    match m {
        ModelKind::Sequence => "sequence",
        ModelKind::Density => "density",
        ModelKind::Regression => "regression",
    }
}

/// Parameters probed in an experiment: profile labels for the sequence
/// model, the catalog function otherwise.
fn labelled_profiles(cfg: &ExperimentConfig) -> Vec<(String, Option<ProfileSpec>)> {
    match cfg.model {
        ModelKind::Sequence => cfg.profiles.iter().map(|p| (p.to_string(), Some(*p))).collect(),
        _ => vec![(function_label(cfg), None)],
    }
}

fn function_label(cfg: &ExperimentConfig) -> String {
    use crate::functional::FunctionSpec::*;
    match &cfg.function {
        Uniform => "uniform".into(),
        CosinePerturbed { j, c } => format!("cosine:{j}:{c}"),
        TrigSum(v) => format!("trig:{}", v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",")),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CoverageRow {
    pub profile: String,
    pub n: usize,
    pub k: usize,
    pub bias: f64,
    pub coverage: f64,
    pub coverage_se: f64,
    pub mean_diameter: f64,
    pub median_diameter: f64,
    pub mean_radius: f64,
    pub mean_k_hat: f64,
    /// Mean of `√k·|σ̂² − σ²|` for the radius half; NaN with known `σ²`.
    pub sigma_error: f64,
    pub sigma_error_se: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CoverageReport {
    pub model: ModelKind,
    pub alpha: f64,
    pub rule: String,
    pub reps: usize,
    pub rows: Vec<CoverageRow>,
}

impl CoverageReport {
    pub fn table(&self) -> Table {
        let mut t = Table::new(&[
            "model",
            "profile",
            "n",
            "reps",
            "alpha",
            "rule",
            "k",
            "bias",
            "coverage",
            "coverage_se",
            "mean_diameter",
            "median_diameter",
            "mean_radius",
            "mean_k_hat",
            "sqrt_k_sigma_error",
            "sqrt_k_sigma_error_se",
        ]);
        for r in &self.rows {
            t.push(vec![
                model_name(self.model).into(),
                r.profile.clone(),
                u(r.n),
                u(self.reps),
                f(self.alpha),
                self.rule.clone(),
                u(r.k),
                f(r.bias),
                f(r.coverage),
                f(r.coverage_se),
                f(r.mean_diameter),
                f(r.median_diameter),
                f(r.mean_radius),
                f(r.mean_k_hat),
                f(r.sigma_error),
                f(r.sigma_error_se),
            ]);
        }
        t
    }
}

struct RepStats {
    covered: bool,
    diameter: f64,
    radius: f64,
    k_hat: usize,
    sigma_error: f64,
}

fn coverage_cell(cell: &Cell<'_>, label: &str, reps: usize) -> Result<CoverageRow> {
    let noise = match cell.cfg.model {
        ModelKind::Sequence => 2.0 * cell.cfg.sigma2,
        _ => f64::NAN,
    };
    let theta = &cell.theta;
    let out = cell.run(reps, |r| RepStats {
        covered: contains(&r.ball, theta),
        diameter: diameter(&r.ball),
        radius: r.ball.radius,
        k_hat: r.k_hat,
        sigma_error: match (cell.window, r.ball.sigma2) {
            (Some(_), Some(s)) => (r.ball.k as f64).sqrt() * (s - noise).abs(),
            _ => f64::NAN,
        },
    })?;
    let cov = out.iter().filter(|o| o.covered).count() as f64 / reps as f64;
    let diam: Vec<f64> = out.iter().map(|o| o.diameter).collect();
    let sig: Vec<f64> = out.iter().map(|o| o.sigma_error).collect();
    let first = cell.replicate(0)?;
    Ok(CoverageRow {
        profile: label.to_string(),
        n: cell.n,
        k: first.ball.k,
        bias: first.ball.bias,
        coverage: cov,
        coverage_se: binomial_se(cov, reps),
        mean_diameter: mean(&diam),
        median_diameter: median(&diam),
        mean_radius: mean(&out.iter().map(|o| o.radius).collect::<Vec<_>>()),
        mean_k_hat: mean(&out.iter().map(|o| o.k_hat as f64).collect::<Vec<_>>()),
        sigma_error: mean(&sig),
        sigma_error_se: (variance(&sig) / reps as f64).sqrt(),
    })
}

/// Empirical coverage of the ball at parameters on the supermodel boundary.
pub fn run_coverage(cfg: &ExperimentConfig) -> Result<CoverageReport> {
    cfg.validate()?;
    let model = cfg.supermodel()?;
    with_threads(cfg.threads, || {
        let mut rows = Vec::new();
        for (idx, (label, profile)) in labelled_profiles(cfg).into_iter().enumerate() {
            for &n in &cfg.n_grid {
                let theta = match profile {
                    Some(p) => p.theta(&model, n, cfg.sigma2)?,
                    None => Vec::new(),
                };
                let cell = Cell::new(cfg, model, theta, n, None, [TAG_COVERAGE, idx as u64])?;
                rows.push(coverage_cell(&cell, &label, cfg.reps)?);
            }
        }
        Ok(CoverageReport {
            model: cfg.model,
            alpha: cfg.alpha,
            rule: cfg.quantile_rule()?.name().into(),
            reps: cfg.reps,
            rows,
        })
    })?
}

#[derive(Debug, Clone, PartialEq)]
pub struct RateRow {
    pub profile: String,
    pub n: usize,
    pub k: usize,
    pub median_diameter: f64,
    pub mean_diameter: f64,
    pub coverage: f64,
    pub floor_rate: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RateFit {
    pub profile: String,
    pub slope: f64,
    pub slope_se: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RateReport {
    pub beta: f64,
    pub beta1: f64,
    pub rows: Vec<RateRow>,
    pub fits: Vec<RateFit>,
}

impl RateReport {
    pub fn slope(&self, profile: &str) -> Option<f64> {
        self.fits.iter().find(|f| f.profile == profile).map(|f| f.slope)
    }

    pub fn table(&self) -> Table {
        let mut t = Table::new(&[
            "profile",
            "n",
            "beta",
            "beta1",
            "k",
            "median_diameter",
            "mean_diameter",
            "coverage",
            "floor_rate",
            "slope",
            "slope_se",
        ]);
        for r in &self.rows {
            let fit = self.fits.iter().find(|f| f.profile == r.profile).expect("fit per profile");
            t.push(vec![
                r.profile.clone(),
                u(r.n),
                f(self.beta),
                f(self.beta1),
                u(r.k),
                f(r.median_diameter),
                f(r.mean_diameter),
                f(r.coverage),
                f(r.floor_rate),
                f(fit.slope),
                f(fit.slope_se),
            ]);
        }
        t
    }
}

/// Median diameter against `n` at parameters on the submodel boundary, with a
/// least-squares log-log slope per profile.
pub fn run_rates(cfg: &ExperimentConfig) -> Result<RateReport> {
    cfg.validate()?;
    let (first, last) = (cfg.n_grid[0], *cfg.n_grid.last().expect("nonempty"));
    if cfg.n_grid.len() < 2 || last < 16 * first {
        return Err(Error::Config("rate fits need an n grid spanning at least 4 octaves".into()));
    }
    let model = cfg.supermodel()?;
    let sub = cfg.submodel()?;
    check_nesting(&model, &sub).map_err(|e| Error::Config(e.to_string()))?;
    with_threads(cfg.threads, || {
        let mut rows = Vec::new();
        let mut fits = Vec::new();
        for (idx, (label, profile)) in labelled_profiles(cfg).into_iter().enumerate() {
            let mut meds = Vec::new();
            for &n in &cfg.n_grid {
                let theta = match profile {
                    Some(p) => p.theta(&sub, n, cfg.sigma2)?,
                    None => Vec::new(),
                };
                let cell = Cell::new(cfg, model, theta, n, None, [TAG_RATES, idx as u64])?;
                let row = coverage_cell(&cell, &label, cfg.reps)?;
                meds.push(row.median_diameter);
                rows.push(RateRow {
                    profile: label.clone(),
                    n,
                    k: row.k,
                    median_diameter: row.median_diameter,
                    mean_diameter: row.mean_diameter,
                    coverage: row.coverage,
                    floor_rate: floor_rate(cfg.beta, cfg.beta1, n),
                });
            }
            let ns: Vec<f64> = cfg.n_grid.iter().map(|&n| n as f64).collect();
            let (slope, slope_se) = loglog_slope(&ns, &meds);
            if !slope.is_finite() {
                return Err(Error::Numerical(format!("non-finite slope for profile {label}")));
            }
            fits.push(RateFit {
                profile: label,
                slope,
                slope_se,
            });
        }
        Ok(RateReport {
            beta: cfg.beta,
            beta1: cfg.beta1,
            rows,
            fits,
        })
    })?
}

#[derive(Debug, Clone, PartialEq)]
pub struct NormalityRow {
    pub residual: String,
    pub k: usize,
    pub n: usize,
    pub ks: f64,
    pub mean: f64,
    pub variance: f64,
    /// Frequency of `|S| > √(1/α)`.
    pub chebyshev_exceed: f64,
    pub chebyshev_se: f64,
    /// Whether the residual passes the max-versus-sum diagnostic.
    pub diag_pass: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NormalityReport {
    pub model: ModelKind,
    pub errors: String,
    pub alpha: f64,
    pub reps: usize,
    pub rows: Vec<NormalityRow>,
}

impl NormalityReport {
    pub fn table(&self) -> Table {
        let mut t = Table::new(&[
            "model",
            "errors",
            "residual",
            "k",
            "n",
            "reps",
            "ks",
            "mean",
            "variance",
            "alpha",
            "chebyshev_exceed",
            "chebyshev_se",
            "diag_pass_rate",
        ]);
        for r in &self.rows {
            t.push(vec![
                model_name(self.model).into(),
                self.errors.clone(),
                r.residual.clone(),
                u(r.k),
                u(r.n),
                u(self.reps),
                f(r.ks),
                f(r.mean),
                f(r.variance),
                f(self.alpha),
                f(r.chebyshev_exceed),
                f(r.chebyshev_se),
                f(r.diag_pass),
            ]);
        }
        t
    }
}

/// Standardized statistic `(R − s²)/τ̂` at a fixed center `θ̂ = θ − d`.
fn standardized_draw(cfg: &ExperimentConfig, theta: &[f64], hat: &[f64], k: usize, n: usize, seed: u64) -> Result<f64> {
    let (s2, s1) = truncated_residual(theta, hat, k);
    let est = match cfg.model {
        ModelKind::Sequence => {
            let errors = ErrorDistribution::new(cfg.errors);
            let x = sample_sequence_with(theta, cfg.sigma2, n, k, seed, &errors)?;
            sequence_r_kn(&x, hat, k, cfg.sigma2, &errors)?
        }
        ModelKind::Density => density_r_kn(&sample_density(&cfg.function, n, seed)?, hat, k)?,
        ModelKind::Regression => {
            let noise = NoiseSpec {
                s0: cfg.noise_s0,
                s1: cfg.noise_s1,
                family: cfg.errors,
            };
            regression_r_kn(&sample_regression(&cfg.function, &noise, n, seed)?, hat, k)?
        }
    };
    Ok((est.r - s2) / est.tau(s2, s1))
}

/// Distribution of the standardized norm statistic against `N(0, 1)`, per
/// residual profile, cut-off and sample size.
pub fn run_normality(cfg: &ExperimentConfig) -> Result<NormalityReport> {
    cfg.validate()?;
    if cfg.k_grid.is_empty() || cfg.k_grid.contains(&0) {
        return Err(Error::Config("k_grid must hold positive cut-offs".into()));
    }
    let threshold = (1.0 / cfg.alpha).sqrt();
    with_threads(cfg.threads, || {
        let mut rows = Vec::new();
        for (ri, res) in cfg.residuals.iter().enumerate() {
            for &k in &cfg.k_grid {
                let d = res.residual(k);
                let theta = match cfg.model {
                    ModelKind::Sequence => d.clone(),
                    _ => true_coeffs(&cfg.function, k)?,
                };
                let hat: Vec<f64> = match cfg.model {
                    ModelKind::Sequence => vec![0.0; k],
                    _ => theta.iter().zip(&d).map(|(t, di)| t - di).collect(),
                };
                for &n in &cfg.n_grid {
                    let draws = (0..cfg.reps as u64)
                        .into_par_iter()
                        .map(|rep| {
                            let seed = derive_seed(cfg.seed, &[TAG_NORMALITY, ri as u64, k as u64, n as u64, rep]);
                            standardized_draw(cfg, &theta, &hat, k, n, seed)
                        })
                        .collect::<Result<Vec<f64>>>()?;
                    let exceed = draws.iter().filter(|s| s.abs() > threshold).count() as f64 / cfg.reps as f64;
                    rows.push(NormalityRow {
                        residual: res.to_string(),
                        k,
                        n,
                        ks: ks_normal(&draws),
                        mean: mean(&draws),
                        variance: variance(&draws),
                        chebyshev_exceed: exceed,
                        chebyshev_se: binomial_se(cfg.alpha, cfg.reps),
                        diag_pass: if residual_spread_diagnostic(&hat, &theta, k, cfg.diag_eps) { 1.0 } else { 0.0 },
                    });
                }
            }
        }
        Ok(NormalityReport {
            model: cfg.model,
            errors: cfg.errors.name().into(),
            alpha: cfg.alpha,
            reps: cfg.reps,
            rows,
        })
    })?
}

#[derive(Debug, Clone, PartialEq)]
pub struct SparseRow {
    pub sparsity: String,
    pub d: usize,
    pub n: usize,
    pub median_diameter: f64,
    pub coverage: f64,
    /// `median diameter / n^{−1/4}`.
    pub ratio: f64,
    /// `max(n^{−1/4}, √(D/n) + √(log(2n/D)/n))`.
    pub order: f64,
    pub order_ratio: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SparseReport {
    pub rows: Vec<SparseRow>,
}

impl SparseReport {
    /// `max/min` of the ratio to `n^{−1/4}` across the grid for one sparsity.
    pub fn band(&self, sparsity: &str) -> Option<f64> {
        let r: Vec<f64> = self.rows.iter().filter(|r| r.sparsity == sparsity).map(|r| r.ratio).collect();
        if r.is_empty() {
            return None;
        }
        Some(r.iter().cloned().fold(f64::MIN, f64::max) / r.iter().cloned().fold(f64::MAX, f64::min))
    }

    pub fn slope(&self, sparsity: &str) -> Option<f64> {
        let (ns, ds): (Vec<f64>, Vec<f64>) = self
            .rows
            .iter()
            .filter(|r| r.sparsity == sparsity)
            .map(|r| (r.n as f64, r.median_diameter))
            .unzip();
        (ns.len() >= 2).then(|| loglog_slope(&ns, &ds).0)
    }

    pub fn table(&self) -> Table {
        let mut t = Table::new(&[
            "sparsity",
            "D",
            "n",
            "median_diameter",
            "coverage",
            "ratio_n_quarter",
            "order",
            "ratio_order",
        ]);
        for r in &self.rows {
            t.push(vec![
                r.sparsity.clone(),
                u(r.d),
                u(r.n),
                f(r.median_diameter),
                f(r.coverage),
                f(r.ratio),
                f(r.order),
                f(r.order_ratio),
            ]);
        }
        t
    }
}

/// Finite sequence model `Θ = ℝⁿ` with `k = n`: diameters over `D`-sparse
/// parameters with spikes of amplitude `cfg.spike`.
pub fn run_sparse(cfg: &ExperimentConfig) -> Result<SparseReport> {
    cfg.validate()?;
    if cfg.model != ModelKind::Sequence {
        return Err(Error::Config("the sparse experiment uses the sequence model".into()));
    }
    with_threads(cfg.threads, || {
        let mut rows = Vec::new();
        for (si, sp) in cfg.sparsity.iter().enumerate() {
            for &n in &cfg.n_grid {
                let d = sp.resolve(n);
                let model = Ellipsoid::euclidean(n)?;
                let theta = if d == 0 { vec![0.0] } else { vec![cfg.spike; d] };
                let mut local = cfg.clone();
                local.truncation = Some(n);
                let cell = Cell::new(&local, model, theta, n, Some(n), [TAG_SPARSE, si as u64])?;
                let row = coverage_cell(&cell, &sp.to_string(), cfg.reps)?;
                let nf = n as f64;
                let quarter = nf.powf(-0.25);
                let order = if d == 0 {
                    quarter
                } else {
                    let df = d as f64;
                    quarter.max((df / nf).sqrt() + ((2.0 * nf / df).ln() / nf).sqrt())
                };
                rows.push(SparseRow {
                    sparsity: sp.to_string(),
                    d,
                    n,
                    median_diameter: row.median_diameter,
                    coverage: row.coverage,
                    ratio: row.median_diameter / quarter,
                    order,
                    order_ratio: row.median_diameter / order,
                });
            }
        }
        Ok(SparseReport { rows })
    })?
}

#[derive(Debug, Clone, PartialEq)]
pub struct DualityRow {
    pub n: usize,
    pub eps: f64,
    /// `P(φ = 1)` under a parameter farther than `eps` from the null point.
    pub reject_rate: f64,
    /// `P(φ = 1)` under the null point.
    pub accept_rate: f64,
    pub floor_rate: f64,
    /// Median diameter under the null point over the floor rate.
    pub ratio: f64,
    /// `P(d(center, θ) > diameter)` under the far parameter.
    pub estimator_miss_far: f64,
    /// `P(d(center, θ₁) > diameter)` under the null point.
    pub estimator_miss_null: f64,
    /// Non-coverage under the far parameter.
    pub miss_far: f64,
    pub median_diameter: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DualityReport {
    pub beta: f64,
    pub radius: f64,
    pub beta1: f64,
    pub radius1: f64,
    pub reps: usize,
    pub rows: Vec<DualityRow>,
}

impl DualityReport {
    pub fn table(&self) -> Table {
        let mut t = Table::new(&[
            "n",
            "beta",
            "L",
            "beta1",
            "L1",
            "eps",
            "reject_rate",
            "accept_rate",
            "floor_rate",
            "ratio",
        ]);
        for r in &self.rows {
            t.push(vec![
                u(r.n),
                f(self.beta),
                f(self.radius),
                f(self.beta1),
                f(self.radius1),
                f(r.eps),
                f(r.reject_rate),
                f(r.accept_rate),
                f(r.floor_rate),
                f(r.ratio),
            ]);
        }
        t
    }
}

/// Tests and estimators induced by the ball: null point on the submodel, far
/// alternative displaced along the first coordinate.
pub fn run_duality(cfg: &ExperimentConfig) -> Result<DualityReport> {
    cfg.validate()?;
    if cfg.model != ModelKind::Sequence {
        return Err(Error::Config("the duality experiment uses the sequence model".into()));
    }
    let model = cfg.supermodel()?;
    let sub = cfg.submodel()?;
    check_nesting(&model, &sub).map_err(|e| Error::Config(e.to_string()))?;
    with_threads(cfg.threads, || {
        let mut rows = Vec::new();
        for &n in &cfg.n_grid {
            let floor = floor_rate(cfg.beta, cfg.beta1, n);
            let eps = cfg.eps_factor * floor;
            let theta1 = cfg.null_profile.theta(&sub, n, cfg.sigma2)?;
            let problem = TestProblem::new(theta1.clone(), eps, model)?;
            let mut far = theta1.clone();
            far[0] += cfg.far_factor * eps;
            if !model.contains(&far) {
                return Err(Error::Config(format!("far alternative at n = {n} leaves the supermodel")));
            }
            let null_cell = Cell::new(cfg, model, theta1.clone(), n, None, [TAG_DUALITY, 0])?;
            let far_cell = Cell::new(cfg, model, far.clone(), n, None, [TAG_DUALITY, 1])?;
            let null = null_cell.run(cfg.reps, |r| {
                (
                    confset_to_test(&r.ball, &problem),
                    distance(&r.ball.center, &theta1) > diameter(&r.ball),
                    diameter(&r.ball),
                )
            })?;
            let alt = far_cell.run(cfg.reps, |r| {
                (
                    confset_to_test(&r.ball, &problem),
                    distance(&r.ball.center, &far) > diameter(&r.ball),
                    !contains(&r.ball, &far),
                )
            })?;
            let rate = |v: &mut dyn Iterator<Item = bool>| v.filter(|&b| b).count() as f64 / cfg.reps as f64;
            let diam: Vec<f64> = null.iter().map(|o| o.2).collect();
            let med = median(&diam);
            rows.push(DualityRow {
                n,
                eps,
                reject_rate: rate(&mut alt.iter().map(|o| o.0)),
                accept_rate: rate(&mut null.iter().map(|o| o.0)),
                floor_rate: floor,
                ratio: med / floor,
                estimator_miss_far: rate(&mut alt.iter().map(|o| o.1)),
                estimator_miss_null: rate(&mut null.iter().map(|o| o.1)),
                miss_far: rate(&mut alt.iter().map(|o| o.2)),
                median_diameter: med,
            });
        }
        Ok(DualityReport {
            beta: cfg.beta,
            radius: cfg.radius,
            beta1: cfg.beta1,
            radius1: cfg.radius1,
            reps: cfg.reps,
            rows,
        })
    })?
}
