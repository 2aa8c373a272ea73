//! Deterministic parallel Monte Carlo harness.
//!
//! Replicate `r` derives its own generator seed through the pure mixing
//! function [`crate::rng::mix`], so replicates never share state and can run
//! on any number of threads. Results land in replicate-indexed slots and are
//! reduced in index order with compensated summation; a report is therefore
//! a pure function of its configuration, byte-identical across runs and
//! thread counts.

use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::curve::VolatilityCurve;
use crate::error::{Error, Result};
use crate::estimators::{
    asymptotic_sd, estimate_iv_from_series, BiasCorrection, EstimatorConfig, SpotKernel,
    WeightMode,
};
use crate::rng::mix;
use crate::sim::simulate_observations;

fn default_spot_bandwidth() -> f64 {
    0.4
}

/// Full study configuration; serialized as the JSON file the CLI consumes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McConfig {
    pub curve: VolatilityCurve,
    pub n: usize,
    pub delta: f64,
    /// Number of blocks `1/h`.
    pub blocks: usize,
    /// Frequency cut-off `J`.
    pub j_max: usize,
    pub reps: usize,
    pub base_seed: u64,
    #[serde(default)]
    pub weight_mode: WeightMode,
    #[serde(default)]
    pub bias_correction: BiasCorrection,
    #[serde(default = "default_spot_bandwidth")]
    pub spot_bandwidth: f64,
    #[serde(default)]
    pub spot_kernel: SpotKernel,
    #[serde(default)]
    pub spot_floor: Option<f64>,
    /// Worker threads; `None` uses the global pool. Accepted on input but
    /// left out of serialized reports: the thread count never changes the
    /// numbers, so it has no place in the canonical output.
    #[serde(default, skip_serializing)]
    pub threads: Option<usize>,
}

impl McConfig {
    /// Baseline configuration with the default estimator options.
    pub fn new(
        curve: VolatilityCurve,
        n: usize,
        delta: f64,
        blocks: usize,
        j_max: usize,
        reps: usize,
        base_seed: u64,
    ) -> Self {
        McConfig {
            curve,
            n,
            delta,
            blocks,
            j_max,
            reps,
            base_seed,
            weight_mode: WeightMode::default(),
            bias_correction: BiasCorrection::default(),
            spot_bandwidth: default_spot_bandwidth(),
            spot_kernel: SpotKernel::default(),
            spot_floor: None,
            threads: None,
        }
    }

    /// Estimator settings implied by this study configuration.
    pub fn estimator_config(&self) -> Result<EstimatorConfig> {
        let mut cfg = EstimatorConfig::new(self.n, self.blocks, self.j_max, self.delta)?
            .with_weight_mode(self.weight_mode)
            .with_bias_correction(self.bias_correction)
            .with_spot(self.spot_kernel, self.spot_bandwidth);
        cfg.spot_floor = self.spot_floor;
        Ok(cfg)
    }

    /// Reject invalid configurations before any replicate runs.
    pub fn validate(&self) -> Result<()> {
        self.curve.validate()?;
        self.estimator_config()?;
        if self.reps < 1 {
            return Err(Error::config("replication count must be >= 1".to_string()));
        }
        if !(self.spot_bandwidth > 0.0) {
            return Err(Error::config(format!(
                "spot bandwidth must be positive, got {}",
                self.spot_bandwidth
            )));
        }
        Ok(())
    }
}

/// Linearly interpolated order-statistic quantiles of the estimates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Quantiles {
    pub q05: f64,
    pub q25: f64,
    pub q50: f64,
    pub q75: f64,
    pub q95: f64,
}

/// Summary of one Monte Carlo study.
///
/// `wall_time_s` is a runtime diagnostic and stays out of the serialized
/// report so that equal configurations produce byte-identical JSON.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct McReport {
    pub reps: usize,
    pub mean: f64,
    /// `mean - true_value`.
    pub bias: f64,
    /// Sample standard deviation (denominator `reps - 1`; zero for one rep).
    pub sd: f64,
    /// Root mean squared error against `true_value`.
    pub rmse: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rmse_over_asymptotic: Option<f64>,
    pub quantiles: Quantiles,
    pub true_value: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub asymptotic_sd: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub config: Option<McConfig>,
    #[serde(skip)]
    pub wall_time_s: f64,
}

fn kahan_mean(xs: &[f64], map: impl Fn(f64) -> f64) -> f64 {
    let mut sum = 0.0;
    let mut comp = 0.0;
    for &x in xs {
        let term = map(x) - comp;
        let next = sum + term;
        comp = (next - sum) - term;
        sum = next;
    }
    sum / xs.len() as f64
}

fn quantile(sorted: &[f64], p: f64) -> f64 {
    let n = sorted.len();
    if n == 1 {
        return sorted[0];
    }
    let h = (n - 1) as f64 * p;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(n - 1);
    let frac = h - lo as f64;
    sorted[lo] + frac * (sorted[hi] - sorted[lo])
}

/// Reduce raw estimates into a report (fixed-order compensated sums).
pub fn summarize(samples: &[f64], true_value: f64, asymptotic: Option<f64>) -> Result<McReport> {
    if samples.is_empty() {
        return Err(Error::invalid("cannot summarize an empty sample"));
    }
    let reps = samples.len();
    let mean = kahan_mean(samples, |x| x);
    let bias = mean - true_value;
    let sd = if reps > 1 {
        let ss = kahan_mean(samples, |x| (x - mean) * (x - mean));
        (ss * reps as f64 / (reps - 1) as f64).sqrt()
    } else {
        0.0
    };
    let rmse = kahan_mean(samples, |x| (x - true_value) * (x - true_value)).sqrt();
    let mut sorted = samples.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("estimates are finite"));
    let quantiles = Quantiles {
        q05: quantile(&sorted, 0.05),
        q25: quantile(&sorted, 0.25),
        q50: quantile(&sorted, 0.50),
        q75: quantile(&sorted, 0.75),
        q95: quantile(&sorted, 0.95),
    };
    let rmse_over_asymptotic = asymptotic.filter(|s| *s > 0.0).map(|s| rmse / s);
    Ok(McReport {
        reps,
        mean,
        bias,
        sd,
        rmse,
        rmse_over_asymptotic,
        quantiles,
        true_value,
        asymptotic_sd: asymptotic,
        config: None,
        wall_time_s: 0.0,
    })
}

/// Run every replicate and return the raw estimates in replicate order.
pub fn run_replicates(config: &McConfig) -> Result<Vec<f64>> {
    config.validate()?;
    let est_cfg = config.estimator_config()?;
    let curve = &config.curve;

    let body = || -> Result<Vec<f64>> {
        (0..config.reps as u64)
            .into_par_iter()
            .map(|r| {
                let seed = mix(config.base_seed, r);
                let obs = simulate_observations(curve, config.n, config.delta, seed)?;
                let est = estimate_iv_from_series(&obs, &est_cfg, Some(curve))?;
                Ok(est.iv_hat)
            })
            .collect()
    };

    match config.threads {
        None => body(),
        Some(threads) => {
            if threads < 1 {
                return Err(Error::config("thread hint must be >= 1".to_string()));
            }
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .map_err(|e| Error::config(format!("thread pool: {e}")))?;
            pool.install(body)
        }
    }
}

/// Run the full study: replicates, then summary against the quadrature
/// ground truth of the configured curve.
pub fn run_mc(config: &McConfig) -> Result<McReport> {
    let start = Instant::now();
    let samples = run_replicates(config)?;
    let true_value = config.curve.integral_sigma2();
    let asd = asymptotic_sd(&config.curve, config.delta, config.n);
    let asd = if asd > 0.0 { Some(asd) } else { None };
    let mut report = summarize(&samples, true_value, asd)?;
    report.config = Some(config.clone());
    report.wall_time_s = start.elapsed().as_secs_f64();
    Ok(report)
}
