//! Command-line surface over the specvol library.
//!
//! Numeric results go to standard output as JSON with stable key order;
//! diagnostics go to standard error. Exit codes: 0 on success, 1 on
//! validation errors (bad flags, malformed specs, inconsistent
//! configuration), 2 on runtime errors (I/O, estimation failures).

mod csvio;
mod curvespec;

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use specvol::estimators::{
    asymptotic_sd, efficiency_gap_ratio, estimate_iv_from_series, spot_box_curve,
    spot_local_linear, BiasCorrection, EstimatorConfig, SpotKernel, WeightMode,
};
use specvol::fisher::{fisher_closed, fisher_partial, fisher_tail_bound, FisherReport};
use specvol::gauss::{
    hellinger_bound, hellinger_exact, regression_covariances, sample_perturbed_pair, GaussianLaw,
};
use specvol::mc::{run_replicates, summarize, McConfig};
use specvol::quad::adaptive_simpson;
use specvol::rng::Rng;
use specvol::spectral::{compute_spectral_stats, BlockGrid};
use specvol::VolatilityCurve;

/// Environment variable supplying the default Monte Carlo thread count.
const THREADS_ENV: &str = "SPECVOL_THREADS";

#[derive(Parser)]
#[command(
    name = "specvol",
    version,
    about = "Spectral volatility estimation from noisy high-frequency observations"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate observations of a volatility curve and write them as CSV.
    Simulate {
        /// Curve spec: const:<s> | quartic:<a>,<b>,<c> | cos:<n>,<alpha> | table:<path>
        #[arg(long)]
        curve: String,
        #[arg(long)]
        n: usize,
        /// Noise standard deviation.
        #[arg(long)]
        delta: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Output CSV path (header `i,y`).
        #[arg(long)]
        out: PathBuf,
    },
    /// Estimate volatility quantities from an observation CSV.
    #[command(subcommand)]
    Estimate(EstimateCommand),
    /// Run a Monte Carlo study from a JSON configuration file.
    Mc {
        /// McConfig JSON file.
        #[arg(long)]
        config: PathBuf,
        /// Also write the report JSON here.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Write per-replicate estimates as CSV (`rep,iv_hat`).
        #[arg(long)]
        reps_csv: Option<PathBuf>,
    },
    /// Fisher information of the block variance parameter.
    Fisher {
        #[arg(long)]
        theta: f64,
        #[arg(long)]
        h0: f64,
        /// Optional truncation for the partial sum.
        #[arg(long = "J")]
        j_max: Option<usize>,
    },
    /// Numerical verification suites (JSON pass/fail tables).
    #[command(subcommand)]
    Verify(VerifyCommand),
}

#[derive(Clone, Copy, ValueEnum)]
enum WeightModeArg {
    Adaptive,
    Oracle,
}

#[derive(Clone, Copy, ValueEnum)]
enum BiasArg {
    Paper,
    Exact,
}

#[derive(Clone, Copy, ValueEnum)]
enum KernelArg {
    Box,
    LocalLinear,
}

#[derive(Args)]
struct ObsArgs {
    /// Observation CSV (header `i,y`).
    #[arg(long)]
    obs: PathBuf,
    /// Noise standard deviation of the observations.
    #[arg(long)]
    delta: f64,
    /// Number of blocks.
    #[arg(long)]
    blocks: usize,
}

#[derive(Subcommand)]
enum EstimateCommand {
    /// Efficient integrated-volatility estimate.
    Iv {
        #[command(flatten)]
        obs: ObsArgs,
        /// Frequency cut-off.
        #[arg(long = "J")]
        j_max: usize,
        #[arg(long, value_enum, default_value_t = WeightModeArg::Adaptive)]
        weights: WeightModeArg,
        #[arg(long, value_enum, default_value_t = BiasArg::Paper)]
        bias: BiasArg,
        /// Reference curve (required for oracle weights; enables the
        /// asymptotic standard deviation either way).
        #[arg(long)]
        curve: Option<String>,
        #[arg(long, default_value_t = 0.4)]
        spot_bandwidth: f64,
        #[arg(long, value_enum, default_value_t = KernelArg::LocalLinear)]
        spot_kernel: KernelArg,
    },
    /// Spot-volatility curve at the block centers.
    Spot {
        #[command(flatten)]
        obs: ObsArgs,
        #[arg(long, default_value_t = 0.4)]
        bandwidth: f64,
        #[arg(long, value_enum, default_value_t = KernelArg::LocalLinear)]
        kernel: KernelArg,
    },
}

#[derive(Subcommand)]
enum VerifyCommand {
    /// Truncated series against its closed form.
    Series {
        #[arg(long)]
        lambda: f64,
        #[arg(long = "J")]
        j_max: usize,
    },
    /// Closed-form Fisher information against the truncated sum plus tail.
    Fisher {
        #[arg(long)]
        theta: f64,
        #[arg(long)]
        h0: f64,
        #[arg(long = "J", default_value_t = 1_000_000)]
        j_max: usize,
    },
    /// Hellinger identities and bounds on random Gaussian pairs.
    Hellinger {
        #[arg(long, default_value_t = 200)]
        pairs: usize,
        #[arg(long, default_value_t = 6)]
        max_dim: usize,
        #[arg(long, default_value_t = 0x5015_2026)]
        seed: u64,
    },
    /// Decay of the distance between the sampled and window-averaged
    /// observation laws.
    RegressionBound {
        #[arg(long, default_value_t = 1.0)]
        delta: f64,
        /// Comma-separated grid sizes.
        #[arg(long, default_value = "8,16,32,64")]
        sizes: String,
        /// Knots of the tabulated oscillating test curve.
        #[arg(long, default_value_t = 2048)]
        knots: usize,
    },
    /// Grid collapse of the indistinguishability curve.
    Counterexample {
        #[arg(long)]
        n_freq: u32,
        #[arg(long)]
        alpha: f64,
    },
}

enum CliError {
    Validation(String),
    Runtime(String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Validation(_) => 1,
            CliError::Runtime(_) => 2,
        }
    }

    fn message(&self) -> &str {
        match self {
            CliError::Validation(m) | CliError::Runtime(m) => m,
        }
    }
}

impl From<specvol::Error> for CliError {
    fn from(e: specvol::Error) -> Self {
        match e {
            specvol::Error::InvalidInput { .. }
            | specvol::Error::Config { .. }
            | specvol::Error::NonPositiveVolatility { .. } => CliError::Validation(e.to_string()),
            specvol::Error::Estimation { .. } | specvol::Error::NotPositiveDefinite { .. } => {
                CliError::Runtime(e.to_string())
            }
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Runtime(e.to_string())
    }
}

impl From<curvespec::SpecError> for CliError {
    fn from(e: curvespec::SpecError) -> Self {
        CliError::Validation(e.to_string())
    }
}

fn emit<T: Serialize>(value: &T) -> Result<(), CliError> {
    let json = serde_json::to_string_pretty(value)
        .map_err(|e| CliError::Runtime(format!("serialization: {e}")))?;
    println!("{json}");
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // Help and version requests are successful output, not errors.
            if matches!(
                e.kind(),
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion
            ) {
                print!("{e}");
                return ExitCode::SUCCESS;
            }
            eprint!("{e}");
            return ExitCode::from(1);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.message());
            ExitCode::from(e.code())
        }
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Simulate { curve, n, delta, seed, out } => {
            let spec = curvespec::parse_curve_spec(&curve)?;
            let obs = specvol::simulate_observations(spec.curve(), n, delta, seed)?;
            csvio::write_observations(&out, &obs)?;
            eprintln!(
                "wrote {} observations of {} to {}",
                obs.n,
                spec.format(),
                out.display()
            );
            Ok(())
        }
        Command::Estimate(cmd) => run_estimate(cmd),
        Command::Mc { config, out, reps_csv } => run_mc_command(config, out, reps_csv),
        Command::Fisher { theta, h0, j_max } => {
            let report = FisherReport::new(theta, h0, j_max)?;
            emit(&report)
        }
        Command::Verify(cmd) => run_verify(cmd),
    }
}

fn run_estimate(cmd: EstimateCommand) -> Result<(), CliError> {
    match cmd {
        EstimateCommand::Iv { obs, j_max, weights, bias, curve, spot_bandwidth, spot_kernel } => {
            let series = csvio::read_observations(&obs.obs, obs.delta)?;
            let reference = match curve {
                Some(text) => Some(curvespec::parse_curve_spec(&text)?.into_curve()),
                None => None,
            };
            let config = EstimatorConfig::new(series.n, obs.blocks, j_max, obs.delta)?
                .with_weight_mode(match weights {
                    WeightModeArg::Adaptive => WeightMode::Adaptive,
                    WeightModeArg::Oracle => WeightMode::Oracle,
                })
                .with_bias_correction(match bias {
                    BiasArg::Paper => BiasCorrection::Paper,
                    BiasArg::Exact => BiasCorrection::Exact,
                })
                .with_spot(
                    match spot_kernel {
                        KernelArg::Box => SpotKernel::Box,
                        KernelArg::LocalLinear => SpotKernel::LocalLinear,
                    },
                    spot_bandwidth,
                );
            let estimate = estimate_iv_from_series(&series, &config, reference.as_ref())?;
            emit(&estimate)
        }
        EstimateCommand::Spot { obs, bandwidth, kernel } => {
            let series = csvio::read_observations(&obs.obs, obs.delta)?;
            let grid = BlockGrid::new(series.n, obs.blocks)?;
            let stats = compute_spectral_stats(&series, grid, 1)?;
            let estimate = match kernel {
                KernelArg::LocalLinear => spot_local_linear(&stats, bandwidth, None)?,
                KernelArg::Box => spot_box_curve(&stats, bandwidth)?,
            };
            emit(&estimate)
        }
    }
}

fn run_mc_command(
    config: PathBuf,
    out: Option<PathBuf>,
    reps_csv: Option<PathBuf>,
) -> Result<(), CliError> {
    let text = std::fs::read_to_string(&config)?;
    let mut cfg: McConfig = serde_json::from_str(&text)
        .map_err(|e| CliError::Validation(format!("{}: {e}", config.display())))?;
    if cfg.threads.is_none() {
        if let Ok(value) = std::env::var(THREADS_ENV) {
            let threads = value.parse::<usize>().map_err(|_| {
                CliError::Validation(format!("{THREADS_ENV} must be an integer, got {value:?}"))
            })?;
            cfg.threads = Some(threads);
        }
    }

    let start = Instant::now();
    let samples = run_replicates(&cfg)?;
    let truth = cfg.curve.integral_sigma2();
    let asd = asymptotic_sd(&cfg.curve, cfg.delta, cfg.n);
    let asd = if asd > 0.0 { Some(asd) } else { None };
    let mut report = summarize(&samples, truth, asd)?;
    report.config = Some(cfg);
    report.wall_time_s = start.elapsed().as_secs_f64();
    eprintln!(
        "{} replicates in {:.2}s",
        report.reps, report.wall_time_s
    );

    if let Some(path) = reps_csv {
        csvio::write_replicates(&path, &samples)?;
    }
    let json = serde_json::to_string_pretty(&report)
        .map_err(|e| CliError::Runtime(format!("serialization: {e}")))?;
    if let Some(path) = out {
        std::fs::write(&path, format!("{json}\n"))?;
    }
    println!("{json}");
    Ok(())
}

// --- verification subcommands --------------------------------------------

#[derive(Serialize)]
struct SeriesVerdict {
    lambda: f64,
    j_max: usize,
    lhs: f64,
    tail: f64,
    rhs: f64,
    abs_diff: f64,
    pass: bool,
}

#[derive(Serialize)]
struct FisherVerdict {
    theta: f64,
    h0: f64,
    j_max: usize,
    closed: f64,
    partial: f64,
    tail_bound: f64,
    rel_diff: f64,
    pass: bool,
}

#[derive(Serialize)]
struct HellingerVerdict {
    pairs: usize,
    max_dim: usize,
    bound_violations: usize,
    max_closed_form_error: f64,
    subadditivity_violations: usize,
    pass: bool,
}

#[derive(Serialize)]
struct RegressionVerdict {
    delta: f64,
    sizes: Vec<usize>,
    h_squared: Vec<f64>,
    strictly_decreasing: bool,
    log_log_slope: f64,
    pass: bool,
}

#[derive(Serialize)]
struct CounterexampleVerdict {
    n_freq: u32,
    alpha: f64,
    cell_target: f64,
    max_abs_deviation: f64,
    /// Globally suboptimal-vs-efficient variance ratio of the curve.
    efficiency_gap: f64,
    pass: bool,
}

fn run_verify(cmd: VerifyCommand) -> Result<(), CliError> {
    match cmd {
        VerifyCommand::Series { lambda, j_max } => {
            let id = specvol::fisher::series_identity(lambda, j_max)?;
            let abs_diff = ((id.lhs + id.tail) - id.rhs).abs();
            emit(&SeriesVerdict {
                lambda,
                j_max,
                lhs: id.lhs,
                tail: id.tail,
                rhs: id.rhs,
                abs_diff,
                pass: abs_diff <= 1e-10,
            })
        }
        VerifyCommand::Fisher { theta, h0, j_max } => {
            let closed = fisher_closed(theta, h0)?;
            let partial = fisher_partial(theta, h0, j_max)?;
            let tail_bound = fisher_tail_bound(h0, j_max);
            let rel_diff = ((closed - (partial + tail_bound)) / closed).abs();
            emit(&FisherVerdict {
                theta,
                h0,
                j_max,
                closed,
                partial,
                tail_bound,
                rel_diff,
                pass: rel_diff <= 1e-6,
            })
        }
        VerifyCommand::Hellinger { pairs, max_dim, seed } => {
            let verdict = verify_hellinger(pairs, max_dim, seed)?;
            emit(&verdict)
        }
        VerifyCommand::RegressionBound { delta, sizes, knots } => {
            let sizes: Vec<usize> = sizes
                .split(',')
                .map(|s| {
                    s.trim().parse::<usize>().map_err(|_| {
                        CliError::Validation(format!("bad grid size {s:?} in --sizes"))
                    })
                })
                .collect::<Result<_, _>>()?;
            if sizes.len() < 2 {
                return Err(CliError::Validation("--sizes needs at least two entries".into()));
            }
            let verdict = verify_regression_bound(delta, &sizes, knots)?;
            emit(&verdict)
        }
        VerifyCommand::Counterexample { n_freq, alpha } => {
            let curve = VolatilityCurve::counterexample(n_freq, alpha)?;
            let n = n_freq as usize;
            let target = 1.0 / n as f64;
            let max_abs_deviation = (1..=n)
                .map(|i| (curve.cell_variance(i, n) - target).abs())
                .fold(0.0, f64::max);
            emit(&CounterexampleVerdict {
                n_freq,
                alpha,
                cell_target: target,
                max_abs_deviation,
                efficiency_gap: efficiency_gap_ratio(&curve),
                pass: max_abs_deviation <= 1e-12,
            })
        }
    }
}

fn verify_hellinger(pairs: usize, max_dim: usize, seed: u64) -> Result<HellingerVerdict, CliError> {
    let max_dim = max_dim.clamp(1, 16);
    let mut rng = Rng::new(seed);
    let mut bound_violations = 0;
    for i in 0..pairs {
        let dim = 1 + i % max_dim;
        let (p, q) = sample_perturbed_pair(&mut rng, dim);
        let h = hellinger_exact(&p, &q)?;
        let b = hellinger_bound(&p, &q)?;
        if h * h > b.general + 1e-12 {
            bound_violations += 1;
        }
    }

    // Scalar closed forms against direct density quadrature.
    let mut max_err = 0.0f64;
    for (m1, v1, m2, v2) in [(0.0, 1.0, 0.0, 2.0), (0.0, 1.0, 2.0, 1.0), (0.4, 2.0, -0.3, 0.7)] {
        let p = GaussianLaw::new(vec![m1], vec![v1])?;
        let q = GaussianLaw::new(vec![m2], vec![v2])?;
        let exact = hellinger_exact(&p, &q)?.powi(2);
        let density = move |m: f64, v: f64, x: f64| {
            (-(x - m) * (x - m) / (2.0 * v)).exp() / (2.0 * std::f64::consts::PI * v).sqrt()
        };
        let integrand = move |x: f64| {
            let d = density(m1, v1, x).sqrt() - density(m2, v2, x).sqrt();
            d * d
        };
        let quad = adaptive_simpson(&integrand, -50.0, 50.0, 1e-12);
        max_err = max_err.max((exact - quad).abs());
    }

    let mut subadditivity_violations = 0;
    for _ in 0..50 {
        let (p1, q1) = sample_perturbed_pair(&mut rng, 2);
        let (p2, q2) = sample_perturbed_pair(&mut rng, 3);
        let whole = hellinger_exact(
            &GaussianLaw::product(&[p1.clone(), p2.clone()])?,
            &GaussianLaw::product(&[q1.clone(), q2.clone()])?,
        )?;
        let parts = hellinger_exact(&p1, &q1)?.powi(2) + hellinger_exact(&p2, &q2)?.powi(2);
        if whole * whole > parts + 1e-10 {
            subadditivity_violations += 1;
        }
    }

    Ok(HellingerVerdict {
        pairs,
        max_dim,
        bound_violations,
        max_closed_form_error: max_err,
        subadditivity_violations,
        pass: bound_violations == 0 && max_err <= 1e-6 && subadditivity_violations == 0,
    })
}

fn verify_regression_bound(
    delta: f64,
    sizes: &[usize],
    knots: usize,
) -> Result<RegressionVerdict, CliError> {
    let pts: Vec<(f64, f64)> = (0..=knots)
        .map(|i| {
            let t = i as f64 / knots as f64;
            (t, 1.0 + 0.5 * (2.0 * std::f64::consts::PI * t).sin())
        })
        .collect();
    let curve = VolatilityCurve::tabulated(pts)?;
    let mut h_squared = Vec::with_capacity(sizes.len());
    for &n in sizes {
        let (law_y, law_yt) = regression_covariances(&curve, n, delta)?;
        let h = hellinger_exact(&law_y, &law_yt)?;
        h_squared.push(h * h);
    }
    let strictly_decreasing = h_squared.windows(2).all(|w| w[1] < w[0]);
    let logs: Vec<(f64, f64)> = sizes
        .iter()
        .zip(&h_squared)
        .map(|(&n, &v)| ((n as f64).ln(), v.ln()))
        .collect();
    let mx = logs.iter().map(|p| p.0).sum::<f64>() / logs.len() as f64;
    let my = logs.iter().map(|p| p.1).sum::<f64>() / logs.len() as f64;
    let slope = logs.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum::<f64>()
        / logs.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum::<f64>();
    Ok(RegressionVerdict {
        delta,
        sizes: sizes.to_vec(),
        h_squared,
        strictly_decreasing,
        log_log_slope: slope,
        pass: strictly_decreasing && (-2.7..=-1.4).contains(&slope),
    })
}
