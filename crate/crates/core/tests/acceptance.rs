//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any
//! failure. Runs as a plain binary so the lines are always visible.

use std::f64::consts::{SQRT_2, TAU};
use std::process::ExitCode;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use honest_ball::functional::{
    density_r_kn, hoeffding_parts, regression_r_kn, sample_density, true_coeffs, DensitySample, FunctionSpec,
    RegressionSample,
};
use honest_ball::harness::stats::{binomial_se, mean, variance};
use honest_ball::harness::{
    run_coverage, run_duality, run_normality, run_rates, run_sparse, ExperimentConfig, ModelKind, ProfileSpec,
    ResidualSpec, SigmaChoice, SparsitySpec,
};
use honest_ball::norm::sequence_r_kn;
use honest_ball::rng::derive_seed;
use honest_ball::sequence::sample_sequence_with;
use honest_ball::{ErrorDistribution, ErrorFamily};

const SEED: u64 = 20_240_501;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn coverage_profiles() -> Vec<ProfileSpec> {
    vec![
        ProfileSpec::Spike(1),
        ProfileSpec::Spike(20),
        ProfileSpec::Spike(100),
        ProfileSpec::Equal(5),
        ProfileSpec::Equal(50),
        ProfileSpec::Geometric(0.5),
        ProfileSpec::Geometric(0.9),
        ProfileSpec::LeastFavorable,
    ]
}

fn coverage_config(sigma: SigmaChoice) -> ExperimentConfig {
    ExperimentConfig {
        model: ModelKind::Sequence,
        beta: 1.0,
        radius: 1.0,
        n_grid: vec![256, 4096],
        alpha: 0.05,
        reps: 2000,
        sigma,
        profiles: coverage_profiles(),
        seed: SEED,
        ..ExperimentConfig::default()
    }
}

fn check_coverage(cfg: &ExperimentConfig) -> Result<Outcome, String> {
    let rep = run_coverage(cfg).map_err(|e| e.to_string())?;
    let worst = rep
        .rows
        .iter()
        .min_by(|a, b| a.coverage.total_cmp(&b.coverage))
        .ok_or("empty report")?;
    let pass = rep.rows.iter().all(|r| r.coverage >= 0.94);
    Ok(outcome(
        pass,
        format!(
            "{} cells, min coverage {:.4} ({} at n = {})",
            rep.rows.len(),
            worst.coverage,
            worst.profile,
            worst.n
        ),
    ))
}

fn criterion_1() -> Result<Outcome, String> {
    let projected = check_coverage(&coverage_config(SigmaChoice::Known))?;
    let raw = check_coverage(&ExperimentConfig {
        project: false,
        ..coverage_config(SigmaChoice::Known)
    })?;
    Ok(outcome(
        projected.pass && raw.pass,
        format!("projected: {}; unprojected: {}", projected.detail, raw.detail),
    ))
}

/// Variance of `Σ_{i≤k}[(dᵢ + sεᵢ)² − s²]` from the moments of `ε`.
fn r_variance_oracle(d: &[f64], s2: f64, m3: f64, m4: f64) -> f64 {
    let s = s2.sqrt();
    d.iter()
        .map(|&di| s2 * s2 * (m4 - 1.0) + 4.0 * di * di * s2 + 4.0 * di * s * s2 * m3)
        .sum()
}

fn criterion_2() -> Result<Outcome, String> {
    let (k, n, reps) = (100usize, 500usize, 10_000u64);
    let theta: Vec<f64> = (1..=k).map(|i| 1.0 / i as f64).collect();
    let hat: Vec<f64> = theta.iter().enumerate().map(|(i, t)| t - 0.1 * (-(i as f64) / 10.0).exp()).collect();
    let d: Vec<f64> = theta.iter().zip(&hat).map(|(t, h)| t - h).collect();
    let s2_true: f64 = d.iter().map(|v| v * v).sum();
    let mut details = Vec::new();
    let mut pass = true;
    // (family, E ε³, E ε⁴)
    for (family, m3, m4) in [
        (ErrorFamily::StandardNormal, 0.0, 3.0),
        (ErrorFamily::CenteredExponential, 2.0, 9.0),
    ] {
        let errors = ErrorDistribution::new(family);
        let mut r = Vec::with_capacity(reps as usize);
        let mut tau2 = 0.0;
        for rep in 0..reps {
            let x = sample_sequence_with(&theta, 1.0, n, k, derive_seed(SEED, &[2, rep]), &errors)
                .map_err(|e| e.to_string())?;
            let est = sequence_r_kn(&x, &hat, k, 1.0, &errors).map_err(|e| e.to_string())?;
            let s1: f64 = d.iter().sum();
            tau2 = est.tau(s2_true, s1).powi(2);
            r.push(est.r);
        }
        let oracle = r_variance_oracle(&d, 1.0 / n as f64, m3, m4);
        let (m, v) = (mean(&r), variance(&r));
        let se = (v / reps as f64).sqrt();
        let mean_ok = (m - s2_true).abs() <= 3.0 * se;
        let var_ok = (v / tau2 - 1.0).abs() <= 0.10;
        let plug_ok = (tau2 / oracle - 1.0).abs() < 1e-9;
        pass &= mean_ok && var_ok && plug_ok;
        details.push(format!(
            "{}: mean dev {:.2} SE, var/tau2 {:.4}, tau2/oracle {:.3e}",
            family.name(),
            (m - s2_true) / se,
            v / tau2,
            tau2 / oracle - 1.0
        ));
    }
    Ok(outcome(pass, details.join("; ")))
}

fn criterion_3() -> Result<Outcome, String> {
    let cfg = ExperimentConfig {
        model: ModelKind::Sequence,
        n_grid: vec![1024],
        k_grid: vec![200],
        reps: 10_000,
        residuals: vec![ResidualSpec::Zero, ResidualSpec::Equal(0.01), ResidualSpec::Equal(1.0)],
        seed: SEED,
        ..ExperimentConfig::default()
    };
    let rep = run_normality(&cfg).map_err(|e| e.to_string())?;
    let pass = rep.rows.len() == 3 && rep.rows.iter().all(|r| r.ks < 0.02);
    let detail = rep
        .rows
        .iter()
        .map(|r| format!("{} KS {:.4}", r.residual, r.ks))
        .collect::<Vec<_>>()
        .join(", ");
    Ok(outcome(pass, detail))
}

fn criterion_4() -> Result<Outcome, String> {
    let base = ExperimentConfig {
        n_grid: vec![400],
        k_grid: vec![10, 50],
        reps: 4000,
        alpha: 0.05,
        residuals: vec![ResidualSpec::Zero, ResidualSpec::Equal(0.01), ResidualSpec::Spike(0.25)],
        seed: SEED,
        ..ExperimentConfig::default()
    };
    let cases = [
        ("gaussian", ModelKind::Sequence, ErrorFamily::StandardNormal),
        ("exponential", ModelKind::Sequence, ErrorFamily::CenteredExponential),
        ("density", ModelKind::Density, ErrorFamily::StandardNormal),
        ("regression", ModelKind::Regression, ErrorFamily::StandardNormal),
    ];
    let mut pass = true;
    let mut details = Vec::new();
    for (label, model, errors) in cases {
        let cfg = ExperimentConfig {
            model,
            errors,
            ..base.clone()
        };
        let rep = run_normality(&cfg).map_err(|e| e.to_string())?;
        let limit = cfg.alpha + 2.0 * binomial_se(cfg.alpha, cfg.reps);
        let worst = rep.rows.iter().map(|r| r.chebyshev_exceed).fold(0.0, f64::max);
        pass &= rep.rows.iter().all(|r| r.chebyshev_exceed <= limit);
        details.push(format!("{label} max {worst:.4}"));
    }
    Ok(outcome(pass, format!("{} (limit {:.4})", details.join(", "), 0.05 + 2.0 * binomial_se(0.05, 4000))))
}

fn rate_config(beta: f64, beta1: f64, profile: ProfileSpec) -> ExperimentConfig {
    ExperimentConfig {
        model: ModelKind::Sequence,
        beta,
        radius: 100.0,
        beta1,
        radius1: 100.0,
        n_grid: vec![1 << 8, 1 << 10, 1 << 12, 1 << 14],
        reps: 500,
        profiles: vec![profile],
        seed: SEED,
        ..ExperimentConfig::default()
    }
}

fn criterion_5() -> Result<Outcome, String> {
    let cases = [
        ("beta=1 beta1=1", rate_config(1.0, 1.0, ProfileSpec::LeastFavorable), -1.0 / 3.0),
        ("beta=1 beta1=2 spike", rate_config(1.0, 2.0, ProfileSpec::Spike(1)), -0.4),
        ("beta=1/2 beta1=1/2", rate_config(0.5, 0.5, ProfileSpec::LeastFavorable), -0.25),
    ];
    let mut pass = true;
    let mut details = Vec::new();
    for (label, cfg, target) in cases {
        let rep = run_rates(&cfg).map_err(|e| e.to_string())?;
        let fit = &rep.fits[0];
        pass &= (fit.slope - target).abs() <= 0.07;
        details.push(format!("{label}: {:.3} (target {:.3})", fit.slope, target));
    }
    Ok(outcome(pass, details.join(", ")))
}

fn criterion_6() -> Result<Outcome, String> {
    let cov = check_coverage(&coverage_config(SigmaChoice::Estimated(None)))?;
    let cfg = ExperimentConfig {
        n_grid: vec![256, 1024, 4096, 16384],
        reps: 500,
        profiles: vec![ProfileSpec::Spike(1)],
        ..coverage_config(SigmaChoice::Estimated(None))
    };
    let rep = run_coverage(&cfg).map_err(|e| e.to_string())?;
    let errs: Vec<(f64, f64)> = rep.rows.iter().map(|r| (r.sigma_error, r.sigma_error_se)).collect();
    let monotone = errs
        .windows(2)
        .all(|w| w[1].0 <= w[0].0 + 2.0 * (w[0].1.powi(2) + w[1].1.powi(2)).sqrt());
    let decreased = errs.last().map(|l| l.0) < errs.first().map(|f| f.0);
    let trail = errs.iter().map(|e| format!("{:.3}", e.0)).collect::<Vec<_>>().join(" > ");
    Ok(outcome(
        cov.pass && monotone && decreased,
        format!("{}; sqrt(k)|sigma_hat^2 - sigma^2|: {trail}", cov.detail),
    ))
}

/// Trigonometric basis written out independently of the library.
fn basis(i: usize, x: f64) -> f64 {
    match i {
        1 => 1.0,
        _ if i % 2 == 0 => SQRT_2 * (TAU * (i / 2) as f64 * x).cos(),
        _ => SQRT_2 * (TAU * (i / 2) as f64 * x).sin(),
    }
}

/// `Σ_{r≠s} Σ_i a_ir a_is / (n(n−1))` and the same sum of absolute values.
fn naive_u(a: &[Vec<f64>]) -> (f64, f64) {
    let n = a.len();
    let (mut total, mut scale) = (0.0, 0.0);
    for r in 0..n {
        for s in 0..n {
            if r != s {
                for i in 0..a[r].len() {
                    total += a[r][i] * a[s][i];
                    scale += (a[r][i] * a[s][i]).abs();
                }
            }
        }
    }
    let m = (n * (n - 1)) as f64;
    (total / m, scale / m)
}

fn criterion_7() -> Result<Outcome, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let mut worst: f64 = 0.0;
    for inst in 0..100 {
        let n = rng.random_range(2..=50usize);
        let k = rng.random_range(1..=20usize);
        let hat: Vec<f64> = (0..k).map(|_| rng.random_range(-1.0..1.0)).collect();
        let x: Vec<f64> = (0..n).map(|_| rng.random::<f64>()).collect();
        let (fast, (slow, scale)) = if inst % 2 == 0 {
            let data = DensitySample::new(x.clone(), 2.0).map_err(|e| e.to_string())?;
            let a: Vec<Vec<f64>> = x.iter().map(|&xr| (1..=k).map(|i| basis(i, xr) - hat[i - 1]).collect()).collect();
            (density_r_kn(&data, &hat, k).map_err(|e| e.to_string())?.r, naive_u(&a))
        } else {
            let y: Vec<f64> = (0..n).map(|_| rng.random_range(-3.0..3.0)).collect();
            let data = RegressionSample::new(x.clone(), y.clone(), 1.0, 1.0).map_err(|e| e.to_string())?;
            let a: Vec<Vec<f64>> = x
                .iter()
                .zip(&y)
                .map(|(&xr, &yr)| (1..=k).map(|i| yr * basis(i, xr) - hat[i - 1]).collect())
                .collect();
            (regression_r_kn(&data, &hat, k).map_err(|e| e.to_string())?.r, naive_u(&a))
        };
        worst = worst.max((fast - slow).abs() / slow.abs().max(scale).max(f64::MIN_POSITIVE));
    }
    Ok(outcome(worst <= 1e-10, format!("max relative difference {worst:.2e} over 100 instances")))
}

fn criterion_8() -> Result<Outcome, String> {
    let (n, k, reps) = (200usize, 16usize, 10_000u64);
    let spec = FunctionSpec::CosinePerturbed { j: 1, c: 0.5 };
    let theta = true_coeffs(&spec, k).map_err(|e| e.to_string())?;
    let hat: Vec<f64> = theta.iter().enumerate().map(|(i, t)| t - 0.1 / (i + 1) as f64).collect();
    let mut lin = Vec::new();
    let mut deg = Vec::new();
    let mut max_gap: f64 = 0.0;
    for rep in 0..reps {
        let data = sample_density(&spec, n, derive_seed(SEED, &[8, rep])).map_err(|e| e.to_string())?;
        let parts = hoeffding_parts(&data, &theta, &hat, k).map_err(|e| e.to_string())?;
        let r = density_r_kn(&data, &hat, k).map_err(|e| e.to_string())?.r;
        max_gap = max_gap.max((parts.total() - r).abs());
        lin.push(parts.linear);
        deg.push(parts.degenerate);
    }
    let (ml, md) = (mean(&lin), mean(&deg));
    let prod: Vec<f64> = lin.iter().zip(&deg).map(|(l, d)| (l - ml) * (d - md)).collect();
    let cov = mean(&prod);
    let se = (variance(&prod) / reps as f64).sqrt();
    Ok(outcome(
        cov.abs() <= 3.0 * se && max_gap < 1e-12,
        format!("cov {cov:.3e}, {:.2} SE; |parts - R| <= {max_gap:.1e}", cov / se),
    ))
}

fn criterion_9() -> Result<Outcome, String> {
    let cfg = ExperimentConfig {
        model: ModelKind::Sequence,
        n_grid: vec![256, 1024, 4096],
        reps: 2000,
        seed: SEED,
        ..ExperimentConfig::default()
    };
    let rep = run_duality(&cfg).map_err(|e| e.to_string())?;
    let limit = cfg.alpha + 2.0 * binomial_se(cfg.alpha, cfg.reps);
    let pass = rep.rows.iter().all(|r| {
        r.reject_rate <= limit && r.estimator_miss_far <= limit && r.estimator_miss_null <= limit
    });
    let detail = rep
        .rows
        .iter()
        .map(|r| {
            format!(
                "n={}: type-I {:.4}, miss {:.4}/{:.4}",
                r.n, r.reject_rate, r.estimator_miss_null, r.estimator_miss_far
            )
        })
        .collect::<Vec<_>>()
        .join(", ");
    Ok(outcome(pass, format!("{detail} (limit {limit:.4})")))
}

fn criterion_10() -> Result<Outcome, String> {
    let cfg = ExperimentConfig {
        model: ModelKind::Sequence,
        n_grid: vec![256, 1024, 4096, 16384],
        reps: 500,
        sparsity: vec![SparsitySpec::Count(0), SparsitySpec::Count(1), SparsitySpec::Sqrt, SparsitySpec::Full],
        seed: SEED,
        ..ExperimentConfig::default()
    };
    let rep = run_sparse(&cfg).map_err(|e| e.to_string())?;
    let mut pass = true;
    let mut details = Vec::new();
    for sp in ["0", "1", "sqrt"] {
        let band = rep.band(sp).ok_or("missing sparsity row")?;
        pass &= band < 4.0;
        details.push(format!("D={sp} band {band:.2}"));
    }
    let slope = rep.slope("n").ok_or("missing dense row")?;
    pass &= slope > -0.1;
    details.push(format!("D=n slope {slope:.3}"));
    Ok(outcome(pass, details.join(", ")))
}

fn criterion_11() -> Result<Outcome, String> {
    let small = ExperimentConfig {
        n_grid: vec![256, 1024, 4096],
        reps: 100,
        k_grid: vec![5],
        profiles: vec![ProfileSpec::Spike(1), ProfileSpec::Geometric(0.5)],
        sigma: SigmaChoice::Estimated(None),
        seed: SEED,
        ..ExperimentConfig::default()
    };
    let known = ExperimentConfig {
        sigma: SigmaChoice::Known,
        ..small.clone()
    };
    let density = ExperimentConfig {
        model: ModelKind::Density,
        radius: 2.0,
        ..known.clone()
    };
    let reports = |threads: usize| -> Result<Vec<String>, String> {
        let with = |c: &ExperimentConfig| ExperimentConfig {
            threads: Some(threads),
            ..c.clone()
        };
        let e = |e: honest_ball::Error| e.to_string();
        Ok(vec![
            run_coverage(&with(&small)).map_err(e)?.table().to_csv().map_err(e)?,
            run_coverage(&with(&density)).map_err(e)?.table().to_csv().map_err(e)?,
            run_rates(&with(&known)).map_err(e)?.table().to_csv().map_err(e)?,
            run_normality(&with(&known)).map_err(e)?.table().to_csv().map_err(e)?,
            run_sparse(&with(&known)).map_err(e)?.table().to_csv().map_err(e)?,
            run_duality(&with(&known)).map_err(e)?.table().to_csv().map_err(e)?,
        ])
    };
    let a = reports(1)?;
    let b = reports(1)?;
    let c = reports(4)?;
    let same = a == b && a == c;
    Ok(outcome(same, format!("{} reports compared across 2 runs and 1 vs 4 threads", a.len())))
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Result<Outcome, String>); 11] = [
        ("honest coverage", criterion_1),
        ("norm estimator mean and variance", criterion_2),
        ("uniform normality", criterion_3),
        ("chebyshev guarantee", criterion_4),
        ("rate slopes", criterion_5),
        ("estimated noise level", criterion_6),
        ("u-statistic oracle", criterion_7),
        ("hoeffding orthogonality", criterion_8),
        ("duality", criterion_9),
        ("sparse finite model", criterion_10),
        ("determinism", criterion_11),
    ];
    let only: Vec<usize> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let id = i + 1;
        if !only.is_empty() && !only.contains(&id) {
            continue;
        }
        let start = Instant::now();
        let (status, detail) = match run() {
            Ok(o) => (if o.pass { "PASS" } else { "FAIL" }, o.detail),
            Err(e) => ("FAIL", format!("error: {e}")),
        };
        if status == "FAIL" {
            failed += 1;
        }
        println!(
            "criterion {id:>2} {status} {name}: {detail} [{:.1}s]",
            start.elapsed().as_secs_f64()
        );
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        println!("{failed} criteria failed");
        ExitCode::FAILURE
    }
}
