use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use honest_ball::ball::{build_ball, BallSettings, ConfidenceBall, Observations, SigmaSource};
use honest_ball::estimators::{full_grid, project_to_ellipsoid, ure_select};
use honest_ball::functional::{density_moments, regression_moments, CoefficientMoments, DensitySample, RegressionSample};
use honest_ball::harness::{
    run_coverage, run_duality, run_normality, run_rates, run_sparse, with_threads, EstimatorChoice, ExperimentConfig,
    ModelKind, RuleKind, SigmaChoice, Table,
};
use honest_ball::harness::report::{f, u};
use honest_ball::{adaptive_estimator, cutoff, projection_estimator, select_window, split_randomize, Error, SequenceSample};

#[derive(Parser)]
#[command(name = "honest-ball", version, about = "Honest adaptive confidence balls")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Empirical coverage and diameter at supermodel boundary points.
    Coverage(Common),
    /// Diameter rates at submodel points with log-log slope fits.
    Rates(Common),
    /// Normal approximation of the standardized norm statistic.
    Normality(Common),
    /// Diameters over sparse parameters in a finite unrestricted model.
    Sparse(Common),
    /// Tests and estimators induced by the ball.
    Duality(Common),
    /// Ball for a data file.
    Confset(Confset),
}

/// Overrides applied on top of the configuration file.
#[derive(Args)]
struct Common {
    /// TOML experiment configuration.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Sample sizes, comma separated.
    #[arg(long, value_delimiter = ',')]
    n: Option<Vec<usize>>,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    beta: Option<f64>,
    #[arg(long = "L")]
    radius: Option<f64>,
    #[arg(long)]
    beta1: Option<f64>,
    #[arg(long = "L1")]
    radius1: Option<f64>,
    #[arg(long)]
    reps: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// normal, chebyshev or simulated.
    #[arg(long)]
    rule: Option<String>,
    /// known, estimated or estimated:m,l.
    #[arg(long)]
    sigma: Option<String>,
    /// adaptive or projection:k.
    #[arg(long)]
    estimator: Option<String>,
    /// Output CSV; standard output when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    threads: Option<usize>,
}

#[derive(Args)]
struct Confset {
    /// CSV with column `x` (sequence, density) or `x,y` (regression).
    #[arg(long)]
    data: PathBuf,
    #[arg(long, default_value = "sequence")]
    model: String,
    /// Noise scale of the sequence observations `X_i = θ_i + √(σ²/n)ε_i`.
    #[arg(long)]
    n: Option<usize>,
    #[arg(long, default_value_t = 1.0)]
    sigma2: f64,
    #[arg(long, default_value_t = 0.05)]
    alpha: f64,
    #[arg(long, default_value_t = 1.0)]
    beta: f64,
    #[arg(long = "L", default_value_t = 1.0)]
    radius: f64,
    #[arg(long, default_value = "normal")]
    rule: String,
    #[arg(long, default_value = "known")]
    sigma: String,
    #[arg(long, default_value = "adaptive")]
    estimator: String,
    /// Upper bound on the density.
    #[arg(long, default_value_t = 1.0)]
    f_sup: f64,
    /// Upper bound on the conditional noise variance.
    #[arg(long, default_value_t = 1.0)]
    sigma2_sup: f64,
    /// Seed of the sample split.
    #[arg(long, default_value_t = 20_240_501)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    threads: Option<usize>,
}

fn config(c: &Common) -> Result<ExperimentConfig, Error> {
    let mut cfg = match &c.config {
        Some(p) => ExperimentConfig::load(p)?,
        None => ExperimentConfig::default(),
    };
    if let Some(n) = &c.n {
        cfg.n_grid = n.clone();
    }
    macro_rules! set {
        ($($field:ident <- $src:ident),*) => {$(if let Some(v) = c.$src { cfg.$field = v; })*};
    }
    set!(alpha <- alpha, beta <- beta, radius <- radius, beta1 <- beta1, radius1 <- radius1, reps <- reps, seed <- seed);
    if let Some(r) = &c.rule {
        cfg.rule = r.parse()?;
    }
    if let Some(s) = &c.sigma {
        cfg.sigma = s.parse()?;
    }
    if let Some(e) = &c.estimator {
        cfg.estimator = e.parse()?;
    }
    if c.out.is_some() {
        cfg.out = c.out.clone();
    }
    if c.threads.is_some() {
        cfg.threads = c.threads;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn emit(table: &Table, out: Option<&Path>) -> Result<(), Error> {
    match out {
        Some(p) => table.write(p),
        None => {
            print!("{}", table.to_csv()?);
            Ok(())
        }
    }
}

fn read_columns(path: &Path, names: &[&str]) -> Result<Vec<Vec<f64>>, Error> {
    let mut rd = csv::Reader::from_path(path)?;
    let header = rd.headers()?.clone();
    let idx = names
        .iter()
        .map(|name| {
            header
                .iter()
                .position(|h| h.trim() == *name)
                .ok_or_else(|| Error::InvalidArgument(format!("missing column '{name}' in {}", path.display())))
        })
        .collect::<Result<Vec<_>, _>>()?;
    let mut cols = vec![Vec::new(); names.len()];
    for rec in rd.records() {
        let rec = rec?;
        for (col, &i) in cols.iter_mut().zip(&idx) {
            let cell = rec.get(i).unwrap_or("").trim();
            let v = cell
                .parse::<f64>()
                .map_err(|_| Error::InvalidArgument(format!("not a number: '{cell}'")))?;
            col.push(v);
        }
    }
    Ok(cols)
}

fn coefficient_center(mom: &CoefficientMoments, est: EstimatorChoice) -> Result<Vec<f64>, Error> {
    let len = mom.means.len();
    let k = match est {
        EstimatorChoice::Projection(k) => k.min(len),
        EstimatorChoice::Adaptive => ure_select(&mom.means, &mom.mean_vars, &full_grid(len))?,
    };
    Ok(mom.means[..k].to_vec())
}

fn confset(c: &Confset) -> Result<(), Error> {
    let model_kind: ModelKind = match c.model.as_str() {
        "sequence" => ModelKind::Sequence,
        "density" => ModelKind::Density,
        "regression" => ModelKind::Regression,
        m => return Err(Error::Config(format!("unknown model '{m}'"))),
    };
    let mut cfg = ExperimentConfig {
        model: model_kind,
        alpha: c.alpha,
        beta: c.beta,
        radius: c.radius,
        beta1: c.beta,
        radius1: c.radius,
        rule: c.rule.parse::<RuleKind>()?,
        sigma: c.sigma.parse()?,
        estimator: c.estimator.parse()?,
        seed: c.seed,
        ..ExperimentConfig::default()
    };
    cfg.threads = c.threads;
    let model = cfg.supermodel()?;
    let mut settings = BallSettings::new(cfg.quantile_rule()?);
    let ball: ConfidenceBall = match model_kind {
        ModelKind::Sequence => {
            let n = c
                .n
                .ok_or_else(|| Error::InvalidArgument("--n is required for sequence data".into()))?;
            let x = read_columns(&c.data, &["x"])?.remove(0);
            let x = SequenceSample::new(x, n, c.sigma2)?;
            let pair = split_randomize(&x, c.seed);
            if let SigmaChoice::Estimated(w) = cfg.sigma {
                let (m, l) = match w {
                    Some(w) => w,
                    None => select_window(model.beta(), n, model.finite_dim())?,
                };
                settings.sigma = SigmaSource::Estimated { m, l };
            }
            let center = match cfg.estimator {
                EstimatorChoice::Projection(k) => projection_estimator(&pair.first, k.min(x.len()))?,
                EstimatorChoice::Adaptive => adaptive_estimator(&pair.first, &full_grid(x.len()))?,
            };
            let hat = project_to_ellipsoid(&center.theta_hat, &model);
            build_ball(Observations::Sequence(&pair.second), &hat, &model, &settings)?
        }
        ModelKind::Density => {
            if cfg.sigma != SigmaChoice::Known {
                return Err(Error::Config("estimated noise variance needs the sequence model".into()));
            }
            let data = DensitySample::new(read_columns(&c.data, &["x"])?.remove(0), c.f_sup)?;
            let (first, second) = data.split_halves()?;
            let k = cutoff(&model, second.n())?.k;
            let hat = coefficient_center(&density_moments(&first, k)?, cfg.estimator)?;
            let hat = project_to_ellipsoid(&hat, &model);
            build_ball(Observations::Density(&second), &hat, &model, &settings)?
        }
        ModelKind::Regression => {
            if cfg.sigma != SigmaChoice::Known {
                return Err(Error::Config("estimated noise variance needs the sequence model".into()));
            }
            let mut cols = read_columns(&c.data, &["x", "y"])?;
            let y = cols.pop().expect("two columns");
            let x = cols.pop().expect("two columns");
            let data = RegressionSample::new(x, y, c.f_sup, c.sigma2_sup)?;
            let (first, second) = data.split_halves()?;
            let k = cutoff(&model, second.n())?.k;
            let hat = coefficient_center(&regression_moments(&first, k)?, cfg.estimator)?;
            let hat = project_to_ellipsoid(&hat, &model);
            build_ball(Observations::Regression(&second), &hat, &model, &settings)?
        }
    };
    let mut header = vec![
        "radius".to_string(),
        "diameter".into(),
        "k".into(),
        "bias".into(),
        "z".into(),
        "r_hat".into(),
        "a".into(),
        "b".into(),
        "floor_applied".into(),
        "sigma2".into(),
    ];
    header.extend((1..=ball.center.len()).map(|i| format!("center_{i}")));
    let mut row = vec![
        f(ball.radius),
        f(2.0 * ball.radius),
        u(ball.k),
        f(ball.bias),
        f(ball.z),
        f(ball.estimate.r),
        f(ball.estimate.a),
        f(ball.estimate.b),
        ball.floor_applied.to_string(),
        ball.sigma2.map(f).unwrap_or_default(),
    ];
    row.extend(ball.center.iter().map(|&v| f(v)));
    let table = Table {
        header,
        rows: vec![row],
    };
    emit(&table, c.out.as_deref())
}

fn run(cli: Cli) -> Result<(), Error> {
    match cli.command {
        Command::Coverage(c) => {
            let cfg = config(&c)?;
            emit(&run_coverage(&cfg)?.table(), cfg.out.as_deref())
        }
        Command::Rates(c) => {
            let cfg = config(&c)?;
            emit(&run_rates(&cfg)?.table(), cfg.out.as_deref())
        }
        Command::Normality(c) => {
            let cfg = config(&c)?;
            emit(&run_normality(&cfg)?.table(), cfg.out.as_deref())
        }
        Command::Sparse(c) => {
            let cfg = config(&c)?;
            emit(&run_sparse(&cfg)?.table(), cfg.out.as_deref())
        }
        Command::Duality(c) => {
            let cfg = config(&c)?;
            emit(&run_duality(&cfg)?.table(), cfg.out.as_deref())
        }
        Command::Confset(c) => {
            let threads = c.threads;
            with_threads(threads, || confset(&c))?
        }
    }
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Config(_) | Error::InvalidArgument(_) | Error::InfeasibleWindow(_) | Error::InfeasibleCutoff(_) => 1,
        _ => 2,
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
