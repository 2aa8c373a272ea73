//! Spot and integrated volatility estimators built on the block statistics.
//!
//! Per block `k`, the statistics `y_jk` are (up to discretization)
//! independent centered Gaussians with variance
//! `h^2 sigma^2(kh) / (pi j)^2 + eps^2`, `eps = delta/sqrt(n)`. Rescaled
//! squares are unbiased for the block variance, and combining frequencies
//! with the local-likelihood weights
//!
//! ```text
//! w_jk = (sigma^2(kh) + pi^2 j^2 / h0^2)^(-2)
//!        / sum_(l=1..J) (sigma^2(kh) + pi^2 l^2 / h0^2)^(-2)
//! ```
//!
//! yields the integrated-volatility estimator
//!
//! ```text
//! IV_hat = sum_k h sum_(j=1..J) w_jk (pi j / h)^2 (y_jk^2 - nu_jk)
//! ```
//!
//! whose error is asymptotically `N(0, 8 delta int sigma^3)` at rate
//! `n^(-1/4)`. The noise correction `nu_jk` is `delta^2/n` in `paper` mode
//! and the exact discrete noise variance of `y_jk` in `exact` mode. The
//! weights may come from the true curve (`oracle`) or from a pre-estimated
//! spot curve (`adaptive`).

use serde::{Deserialize, Serialize};

use crate::curve::VolatilityCurve;
use crate::error::{Error, Result};
use crate::sim::ObservationSeries;
use crate::spectral::{compute_spectral_stats, BlockGrid, BlockWeights, SpectralCoefficients};

const PI: f64 = std::f64::consts::PI;

/// Source of the spot-variance values behind the weights.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum WeightMode {
    /// Weights from a spot pre-estimate computed on the same statistics.
    #[default]
    Adaptive,
    /// Weights from the true volatility curve.
    Oracle,
}

/// Noise correction subtracted from the squared statistics.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BiasCorrection {
    /// Idealized correction `delta^2 / n`.
    #[default]
    Paper,
    /// Exact discrete noise variance of each statistic.
    Exact,
}

/// Smoother used for the spot pre-estimate.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SpotKernel {
    /// Plain window average of the per-block responses.
    Box,
    /// Epanechnikov-weighted local-linear fit; corrects boundary bias.
    #[default]
    LocalLinear,
}

/// Everything the estimation pipeline needs besides the data.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EstimatorConfig {
    pub n: usize,
    pub blocks: usize,
    pub j_max: usize,
    pub delta: f64,
    /// Spectral scale `h0 = h sqrt(n) / delta` (infinite when `delta = 0`).
    pub h0: f64,
    pub weight_mode: WeightMode,
    pub bias_correction: BiasCorrection,
    pub spot_bandwidth: f64,
    pub spot_kernel: SpotKernel,
    /// Lower clamp applied to spot values before they enter the weights;
    /// `None` selects `max(10^-3 * smallest positive estimate, 10^-8)`.
    pub spot_floor: Option<f64>,
}

impl EstimatorConfig {
    /// Defaults: adaptive weights, `paper` correction, local-linear spot
    /// smoothing with bandwidth 0.4 (the `(n^(-1/2) log n)^(1/3)` scale at
    /// one observation per second).
    pub fn new(n: usize, blocks: usize, j_max: usize, delta: f64) -> Result<Self> {
        let grid = BlockGrid::new(n, blocks)?;
        if !(delta >= 0.0) || !delta.is_finite() {
            return Err(Error::invalid(format!("noise level delta must be >= 0, got {delta}")));
        }
        if j_max < 1 || j_max > grid.samples_per_block() {
            return Err(Error::invalid(format!(
                "frequency cut-off must lie in 1..={}, got {j_max}",
                grid.samples_per_block()
            )));
        }
        Ok(EstimatorConfig {
            n,
            blocks,
            j_max,
            delta,
            h0: spectral_scale(grid.h(), n, delta),
            weight_mode: WeightMode::Adaptive,
            bias_correction: BiasCorrection::Paper,
            spot_bandwidth: 0.4,
            spot_kernel: SpotKernel::LocalLinear,
            spot_floor: None,
        })
    }

    pub fn with_weight_mode(mut self, mode: WeightMode) -> Self {
        self.weight_mode = mode;
        self
    }

    pub fn with_bias_correction(mut self, mode: BiasCorrection) -> Self {
        self.bias_correction = mode;
        self
    }

    pub fn with_spot(mut self, kernel: SpotKernel, bandwidth: f64) -> Self {
        self.spot_kernel = kernel;
        self.spot_bandwidth = bandwidth;
        self
    }

    pub fn grid(&self) -> BlockGrid {
        BlockGrid::new(self.n, self.blocks).expect("validated at construction")
    }
}

/// Dimensionless spectral scale `h0 = h sqrt(n) / delta`.
///
/// A zero noise level pushes the scale to infinity, which flows through the
/// weight formulas as uniform weights.
pub fn spectral_scale(h: f64, n: usize, delta: f64) -> f64 {
    if delta > 0.0 {
        h * (n as f64).sqrt() / delta
    } else {
        f64::INFINITY
    }
}

/// Rule-of-thumb frequency cut-off `J = min(2 sigma_bar h / (pi delta), n h)`,
/// clamped to at least one frequency. `sigma_bar` is an upper bound on the
/// volatility, e.g. [`VolatilityCurve::sigma_max`]. Callers normally choose
/// `j_max` explicitly; this helper only encodes the rule of thumb.
pub fn default_frequency_cutoff(sigma_bar: f64, h: f64, delta: f64, n: usize) -> usize {
    let per_block = (n as f64 * h).round() as usize;
    if delta <= 0.0 {
        return per_block.max(1);
    }
    let rule = (2.0 * sigma_bar * h / (PI * delta)).floor() as usize;
    rule.clamp(1, per_block.max(1))
}

// --- spot estimation ---------------------------------------------------

/// Unbiased per-block variance response
/// `r_k = (pi/h)^2 y_1k^2 - pi^2 delta^2 / (n h^2)`.
pub fn spot_responses(stats: &SpectralCoefficients) -> Vec<f64> {
    let grid = stats.grid();
    let scale = (PI / grid.h()).powi(2);
    let correction = stats.eps2();
    (0..grid.blocks())
        .map(|k| {
            let y = stats.y(1, k);
            scale * (y * y - correction)
        })
        .collect()
}

/// Window-averaged spot variance at time `t` with bandwidth `b >= h`.
pub fn spot_block_estimate(stats: &SpectralCoefficients, t: f64, b: f64) -> Result<f64> {
    let grid = stats.grid();
    if !(0.0..=1.0).contains(&t) {
        return Err(Error::invalid(format!("time t must lie in [0, 1], got {t}")));
    }
    if b < grid.h() {
        return Err(Error::invalid(format!(
            "bandwidth {b} must be at least the block length {}",
            grid.h()
        )));
    }
    let responses = spot_responses(stats);
    let mut sum = 0.0;
    let mut count = 0usize;
    for (k, r) in responses.iter().enumerate() {
        if (grid.block_center(k) - t).abs() <= b {
            sum += r;
            count += 1;
        }
    }
    if count == 0 {
        return Err(Error::estimation(format!("no block centers within {b} of t = {t}")));
    }
    Ok(sum / count as f64)
}

/// Spot-variance curve evaluated at the block centers.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpotEstimate {
    pub centers: Vec<f64>,
    pub values: Vec<f64>,
    pub bandwidth: f64,
}

/// Clamp spot values from below; `None` selects the automatic floor
/// `max(10^-3 * smallest positive value, 10^-8)`. Returns the clamped
/// values and the floor used.
pub fn apply_spot_floor(values: &[f64], floor: Option<f64>) -> (Vec<f64>, f64) {
    let floor = floor.unwrap_or_else(|| {
        let min_pos = values.iter().copied().filter(|v| *v > 0.0).fold(f64::INFINITY, f64::min);
        if min_pos.is_finite() {
            (1e-3 * min_pos).max(1e-8)
        } else {
            1e-8
        }
    });
    (values.iter().map(|v| v.max(floor)).collect(), floor)
}

/// Local-linear spot estimate at every block center.
///
/// Responses are the per-block statistics of [`spot_responses`]; each fit
/// uses an Epanechnikov kernel of bandwidth `b` and reproduces affine
/// response profiles exactly, so boundary blocks carry no first-order bias.
/// Fitted values are clamped from below via [`apply_spot_floor`].
pub fn spot_local_linear(
    stats: &SpectralCoefficients,
    b: f64,
    floor: Option<f64>,
) -> Result<SpotEstimate> {
    let grid = stats.grid();
    if !(b > 0.0) || !b.is_finite() {
        return Err(Error::invalid(format!("bandwidth must be positive, got {b}")));
    }
    let responses = spot_responses(stats);
    let centers: Vec<f64> = (0..grid.blocks()).map(|k| grid.block_center(k)).collect();
    let mut fitted = Vec::with_capacity(centers.len());
    for &t in &centers {
        fitted.push(local_linear_at(&centers, &responses, t, b, None)?);
    }
    let (values, _) = apply_spot_floor(&fitted, floor);
    Ok(SpotEstimate { centers, values, bandwidth: b })
}

fn local_linear_at(xs: &[f64], ys: &[f64], t: f64, b: f64, skip: Option<usize>) -> Result<f64> {
    let (mut s0, mut s1, mut s2) = (0.0, 0.0, 0.0);
    let (mut t0, mut t1) = (0.0, 0.0);
    let mut count = 0usize;
    for (idx, (x, y)) in xs.iter().zip(ys).enumerate() {
        if skip == Some(idx) {
            continue;
        }
        let u = (x - t) / b;
        if u.abs() >= 1.0 {
            continue;
        }
        let w = 0.75 * (1.0 - u * u);
        let dx = x - t;
        s0 += w;
        s1 += w * dx;
        s2 += w * dx * dx;
        t0 += w * y;
        t1 += w * y * dx;
        count += 1;
    }
    if count < 2 {
        return Err(Error::estimation(format!(
            "local-linear window at t = {t} holds {count} blocks; need at least 2"
        )));
    }
    let denom = s0 * s2 - s1 * s1;
    if !(denom > 1e-14 * s0 * s2.max(b * b)) {
        return Err(Error::estimation(format!("singular local design at t = {t}")));
    }
    Ok((s2 * t0 - s1 * t1) / denom)
}

/// Box-kernel spot curve: [`spot_block_estimate`] at every block center.
pub fn spot_box_curve(stats: &SpectralCoefficients, b: f64) -> Result<SpotEstimate> {
    let grid = stats.grid();
    let centers: Vec<f64> = (0..grid.blocks()).map(|k| grid.block_center(k)).collect();
    let values = centers
        .iter()
        .map(|&t| spot_block_estimate(stats, t, b))
        .collect::<Result<Vec<f64>>>()?;
    Ok(SpotEstimate { centers, values, bandwidth: b })
}

// --- weights ------------------------------------------------------------

/// Local-likelihood weights, one row of `J` weights per block.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightMatrix {
    rows: Vec<Vec<f64>>,
}

impl WeightMatrix {
    pub fn blocks(&self) -> usize {
        self.rows.len()
    }

    pub fn j_max(&self) -> usize {
        self.rows.first().map_or(0, Vec::len)
    }

    /// Weights `w_(1..J),k` of block `k`.
    pub fn row(&self, k: usize) -> &[f64] {
        &self.rows[k]
    }
}

/// Row-stochastic weight matrix `w_jk` from per-block spot variances.
///
/// Each row sums to one by construction and decreases strictly in `j`.
pub fn compute_weights(spot: &[f64], h0: f64, j_max: usize) -> Result<WeightMatrix> {
    if spot.is_empty() {
        return Err(Error::invalid("spot curve must cover at least one block"));
    }
    if j_max < 1 {
        return Err(Error::invalid("frequency cut-off must be >= 1"));
    }
    if !(h0 > 0.0) {
        return Err(Error::invalid(format!("spectral scale h0 must be positive, got {h0}")));
    }
    let b = PI * PI / (h0 * h0); // zero when h0 is infinite
    let mut rows = Vec::with_capacity(spot.len());
    for (k, &sigma2) in spot.iter().enumerate() {
        if !(sigma2 > 0.0) || !sigma2.is_finite() {
            return Err(Error::invalid(format!(
                "spot variance of block {k} must be positive, got {sigma2}"
            )));
        }
        let mut row = Vec::with_capacity(j_max);
        let mut total = 0.0;
        for j in 1..=j_max {
            let jf = j as f64;
            let g = sigma2 + b * jf * jf;
            let u = 1.0 / (g * g);
            row.push(u);
            total += u;
        }
        for u in row.iter_mut() {
            *u /= total;
        }
        rows.push(row);
    }
    Ok(WeightMatrix { rows })
}

// --- integrated volatility ----------------------------------------------

/// Integrated-volatility estimate with its configuration echo.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IvEstimate {
    pub iv_hat: f64,
    /// `n^(-1/4) sqrt(8 delta int sigma^3)` when a reference curve is known.
    pub asymptotic_sd: Option<f64>,
    pub config: EstimatorConfig,
}

/// Combine statistics and weights into the integrated-volatility estimate.
///
/// The outer block sum uses Kahan compensation in fixed block order, so the
/// result does not depend on how callers parallelize around this function.
pub fn estimate_iv(
    stats: &SpectralCoefficients,
    weights: &WeightMatrix,
    config: &EstimatorConfig,
    reference: Option<&VolatilityCurve>,
) -> Result<IvEstimate> {
    let grid = stats.grid();
    if config.n != stats.n() || config.blocks != grid.blocks() || config.j_max != stats.j_max() {
        return Err(Error::config(format!(
            "config ({}, {}, {}) does not match statistics ({}, {}, {})",
            config.n,
            config.blocks,
            config.j_max,
            stats.n(),
            grid.blocks(),
            stats.j_max()
        )));
    }
    if weights.blocks() != grid.blocks() || weights.j_max() != stats.j_max() {
        return Err(Error::config(format!(
            "weight matrix is {} x {}, statistics need {} x {}",
            weights.j_max(),
            weights.blocks(),
            stats.j_max(),
            grid.blocks()
        )));
    }
    if config.delta != stats.delta() {
        return Err(Error::config(format!(
            "config delta {} does not match series delta {}",
            config.delta,
            stats.delta()
        )));
    }

    let h = grid.h();
    let eps2 = stats.eps2();
    let d2 = stats.delta() * stats.delta();
    let exact_noise = match config.bias_correction {
        BiasCorrection::Paper => None,
        BiasCorrection::Exact => Some(BlockWeights::new(grid, stats.j_max())?),
    };

    let mut sum = 0.0;
    let mut comp = 0.0;
    for k in 0..grid.blocks() {
        let row = weights.row(k);
        let mut inner = 0.0;
        for j in 1..=stats.j_max() {
            let nu = match &exact_noise {
                None => eps2,
                Some(table) => d2 * table.noise_transfer(j, k),
            };
            let y = stats.y(j, k);
            let scale = (PI * j as f64 / h).powi(2);
            inner += row[j - 1] * scale * (y * y - nu);
        }
        // Kahan step for the outer sum.
        let term = h * inner - comp;
        let next = sum + term;
        comp = (next - sum) - term;
        sum = next;
    }

    let asymptotic = reference.map(|curve| asymptotic_sd(curve, stats.delta(), stats.n()));
    Ok(IvEstimate { iv_hat: sum, asymptotic_sd: asymptotic, config: config.clone() })
}

/// Full pipeline: statistics, weights per the configured mode, estimate.
///
/// `reference` supplies the oracle curve for `WeightMode::Oracle` and, in
/// either mode, enables the asymptotic standard deviation in the output.
pub fn estimate_iv_from_series(
    obs: &ObservationSeries,
    config: &EstimatorConfig,
    reference: Option<&VolatilityCurve>,
) -> Result<IvEstimate> {
    let grid = BlockGrid::new(config.n, config.blocks)?;
    let stats = compute_spectral_stats(obs, grid, config.j_max)?;
    let weights = weights_for(&stats, config, reference)?;
    estimate_iv(&stats, &weights, config, reference)
}

/// Build the weight matrix for the configured mode.
///
/// Adaptive weights for block `k` come from a pre-estimate that leaves out
/// block `k`'s own response. Weights independent of `y_jk` keep each term
/// of the estimator unbiased (the rows sum to one), so the plug-in step
/// adds variance but no systematic error.
pub fn weights_for(
    stats: &SpectralCoefficients,
    config: &EstimatorConfig,
    reference: Option<&VolatilityCurve>,
) -> Result<WeightMatrix> {
    let grid = stats.grid();
    let spot = match config.weight_mode {
        WeightMode::Oracle => {
            let curve = reference.ok_or_else(|| {
                Error::config("oracle weights need a reference curve".to_string())
            })?;
            (0..grid.blocks())
                .map(|k| curve.eval_sigma2(k as f64 * grid.h()))
                .collect::<Result<Vec<f64>>>()?
        }
        WeightMode::Adaptive => {
            let responses = spot_responses(stats);
            let centers: Vec<f64> =
                (0..grid.blocks()).map(|k| grid.block_center(k)).collect();
            let mut raw = Vec::with_capacity(centers.len());
            for (k, &t) in centers.iter().enumerate() {
                let fit = match config.spot_kernel {
                    SpotKernel::LocalLinear => {
                        local_linear_at(&centers, &responses, t, config.spot_bandwidth, Some(k))?
                    }
                    SpotKernel::Box => {
                        let mut sum = 0.0;
                        let mut count = 0usize;
                        for (l, (x, r)) in centers.iter().zip(&responses).enumerate() {
                            if l != k && (x - t).abs() <= config.spot_bandwidth {
                                sum += r;
                                count += 1;
                            }
                        }
                        if count == 0 {
                            return Err(Error::estimation(format!(
                                "no other blocks within {} of block {k}",
                                config.spot_bandwidth
                            )));
                        }
                        sum / count as f64
                    }
                };
                raw.push(fit);
            }
            apply_spot_floor(&raw, config.spot_floor).0
        }
    };
    compute_weights(&spot, config.h0, config.j_max)
}

/// Efficient asymptotic standard deviation
/// `n^(-1/4) sqrt(8 delta int_0^1 sigma^3)`.
pub fn asymptotic_sd(curve: &VolatilityCurve, delta: f64, n: usize) -> f64 {
    (n as f64).powf(-0.25) * (8.0 * delta * curve.integral_sigma3()).sqrt()
}

/// Ratio of the globally tuned quadratic-form benchmark to the local
/// benchmark: `sqrt((int sigma^4)^(3/4) / int sigma^3)`. Equals 1 for
/// constant curves and exceeds 1 otherwise.
pub fn efficiency_gap_ratio(curve: &VolatilityCurve) -> f64 {
    (curve.integral_sigma4().powf(0.75) / curve.integral_sigma3()).sqrt()
}

// --- per-block maximum likelihood ----------------------------------------

/// Solver options for the per-block likelihood equation.
#[derive(Debug, Clone, Copy)]
pub struct MleOptions {
    /// Damping factor of the fixed-point step.
    pub damping: f64,
    pub max_iter: usize,
    /// Stop when `|residual| <= tol * max(1, sigma^2)`.
    pub tol: f64,
    /// Iterates must stay in `(0, upper]`.
    pub upper: f64,
}

impl Default for MleOptions {
    fn default() -> Self {
        MleOptions { damping: 0.5, max_iter: 100, tol: 1e-10, upper: 1e6 }
    }
}

/// Outcome of the damped fixed-point iteration.
#[derive(Debug, Clone, Copy)]
pub struct MleOutcome {
    pub sigma2: f64,
    pub converged: bool,
    pub iterations: usize,
    pub residual: f64,
}

/// Right-hand side of the estimating equation at `theta`:
/// `sum_j w_j(theta) (pi j / h)^2 (y_j^2 - eps^2)`.
fn mle_rhs(y_block: &[f64], theta: f64, h: f64, h0: f64, eps2: f64) -> f64 {
    let b = PI * PI / (h0 * h0);
    let mut num = 0.0;
    let mut den = 0.0;
    for (idx, &y) in y_block.iter().enumerate() {
        let jf = (idx + 1) as f64;
        let g = theta + b * jf * jf;
        let u = 1.0 / (g * g);
        let q = (PI * jf / h).powi(2) * (y * y - eps2);
        num += u * q;
        den += u;
    }
    num / den
}

/// Solve the per-block likelihood equation by damped fixed-point iteration
/// from `init`.
///
/// `y_block` holds `y_(1..J),k` for one block. Iterates leaving
/// `(0, upper]` stop the solver with `converged = false` and the projected
/// value.
pub fn mle_refine(
    y_block: &[f64],
    init: f64,
    h: f64,
    h0: f64,
    eps2: f64,
    opts: &MleOptions,
) -> Result<MleOutcome> {
    if y_block.is_empty() {
        return Err(Error::invalid("block statistics must be nonempty"));
    }
    if y_block.iter().any(|y| !y.is_finite()) {
        return Err(Error::invalid("block statistics must be finite"));
    }
    if !(init > 0.0) {
        return Err(Error::invalid(format!("initial value must be positive, got {init}")));
    }
    let mut theta = init;
    for iter in 0..opts.max_iter {
        let residual = mle_rhs(y_block, theta, h, h0, eps2) - theta;
        if residual.abs() <= opts.tol * theta.max(1.0) {
            return Ok(MleOutcome { sigma2: theta, converged: true, iterations: iter, residual });
        }
        let next = theta + opts.damping * residual;
        if !(next > 0.0) || next > opts.upper || !next.is_finite() {
            let projected = next.clamp(f64::MIN_POSITIVE, opts.upper);
            return Ok(MleOutcome {
                sigma2: projected,
                converged: false,
                iterations: iter + 1,
                residual,
            });
        }
        theta = next;
    }
    let residual = mle_rhs(y_block, theta, h, h0, eps2) - theta;
    Ok(MleOutcome {
        sigma2: theta,
        converged: residual.abs() <= opts.tol * theta.max(1.0),
        iterations: opts.max_iter,
        residual,
    })
}

/// One Newton step of the estimating equation from a consistent `init`.
pub fn mle_newton_step(y_block: &[f64], init: f64, h: f64, h0: f64, eps2: f64) -> Result<f64> {
    if y_block.is_empty() {
        return Err(Error::invalid("block statistics must be nonempty"));
    }
    if y_block.iter().any(|y| !y.is_finite()) {
        return Err(Error::invalid("block statistics must be finite"));
    }
    if !(init > 0.0) {
        return Err(Error::invalid(format!("initial value must be positive, got {init}")));
    }
    let b = PI * PI / (h0 * h0);
    // G(theta) = theta - RHS(theta); one step of theta - G/G'.
    let (mut num, mut den) = (0.0, 0.0);
    let (mut dnum, mut dden) = (0.0, 0.0);
    for (idx, &y) in y_block.iter().enumerate() {
        let jf = (idx + 1) as f64;
        let g = init + b * jf * jf;
        let u = g.powi(-2);
        let du = -2.0 * g.powi(-3);
        let q = (PI * jf / h).powi(2) * (y * y - eps2);
        num += u * q;
        den += u;
        dnum += du * q;
        dden += du;
    }
    let rhs = num / den;
    let rhs_prime = (dnum * den - num * dden) / (den * den);
    let g_prime = 1.0 - rhs_prime;
    if g_prime.abs() < 1e-12 {
        return Err(Error::estimation("degenerate Newton step: flat estimating equation"));
    }
    let step = init - (init - rhs) / g_prime;
    Ok(step.max(f64::MIN_POSITIVE))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::theoretical_variance;

    /// Statistics whose squares sit exactly at their idealized means for
    /// the given per-block variances.
    fn idealized_stats(
        spot: &[f64],
        n: usize,
        j_max: usize,
        delta: f64,
    ) -> SpectralCoefficients {
        let grid = BlockGrid::new(n, spot.len()).unwrap();
        let eps = delta / (n as f64).sqrt();
        let mut values = Vec::with_capacity(j_max * spot.len());
        for &sigma2 in spot {
            for j in 1..=j_max {
                values.push(theoretical_variance(sigma2, j, grid.h(), eps).sqrt());
            }
        }
        SpectralCoefficients::from_values(values, j_max, grid, delta).unwrap()
    }

    fn basic_config(n: usize, blocks: usize, j_max: usize, delta: f64) -> EstimatorConfig {
        EstimatorConfig::new(n, blocks, j_max, delta).unwrap()
    }

    // --- weights ---

    #[test]
    fn single_frequency_weight_is_one() {
        let w = compute_weights(&[0.3, 1.0, 2.5], 10.0, 1).unwrap();
        for k in 0..3 {
            assert_eq!(w.row(k), &[1.0]);
        }
    }

    #[test]
    fn two_term_weight_example() {
        let w = compute_weights(&[1.0], 10.0, 2).unwrap();
        let g1 = (1.0 + PI * PI / 100.0).powi(-2);
        let g2 = (1.0 + 4.0 * PI * PI / 100.0).powi(-2);
        let expect = g1 / (g1 + g2);
        assert!((w.row(0)[0] - expect).abs() < 1e-15);
        assert!((expect - 0.6170).abs() < 1e-4, "w1 = {expect}");
    }

    #[test]
    fn weight_rows_are_stochastic_and_decreasing() {
        let w = compute_weights(&[0.2, 0.9, 4.0], 25.0, 40).unwrap();
        for k in 0..3 {
            let row = w.row(k);
            let sum: f64 = row.iter().sum();
            assert!((sum - 1.0).abs() <= 1e-14);
            for pair in row.windows(2) {
                assert!(pair[1] < pair[0]);
            }
        }
    }

    #[test]
    fn infinite_scale_gives_uniform_weights() {
        let w = compute_weights(&[0.5], f64::INFINITY, 4).unwrap();
        for &v in w.row(0) {
            assert!((v - 0.25).abs() < 1e-15);
        }
    }

    #[test]
    fn nonpositive_spot_is_rejected() {
        assert!(compute_weights(&[1.0, 0.0], 10.0, 3).is_err());
        assert!(compute_weights(&[1.0, -0.5], 10.0, 3).is_err());
    }

    // --- spot estimators ---

    #[test]
    fn idealized_responses_average_block_variances() {
        let spot = [0.5, 1.0, 1.5, 2.0];
        let stats = idealized_stats(&spot, 80, 1, 0.05);
        // Full window: plain average of the block variances.
        let got = spot_block_estimate(&stats, 0.5, 1.0).unwrap();
        let expect = spot.iter().sum::<f64>() / 4.0;
        assert!((got - expect).abs() < 1e-12, "{got} vs {expect}");
        // Narrow window around the first center sees sigma^2 = 0.5 and 1.0.
        let got = spot_block_estimate(&stats, 0.125, 0.26).unwrap();
        assert!((got - 0.75).abs() < 1e-12);
    }

    #[test]
    fn single_block_zero_series_estimates_zero() {
        let grid = BlockGrid::new(4, 1).unwrap();
        let stats =
            SpectralCoefficients::from_values(vec![0.0], 1, grid, 0.0).unwrap();
        assert_eq!(spot_block_estimate(&stats, 0.5, 1.0).unwrap(), 0.0);
    }

    #[test]
    fn spot_rejects_undersized_bandwidth() {
        let stats = idealized_stats(&[1.0, 1.0], 8, 1, 0.0);
        assert!(spot_block_estimate(&stats, 0.5, 0.2).is_err());
        assert!(spot_block_estimate(&stats, 1.5, 1.0).is_err());
    }

    #[test]
    fn local_linear_reproduces_affine_responses() {
        // Craft statistics whose responses are exactly affine in the block
        // center, then check the fit returns them unchanged.
        let n = 40;
        let blocks = 8;
        let grid = BlockGrid::new(n, blocks).unwrap();
        let scale = (grid.h() / PI).powi(2);
        let mut values = Vec::new();
        for k in 0..blocks {
            let r = 2.0 + 3.0 * grid.block_center(k);
            values.push((r * scale).sqrt());
        }
        let stats = SpectralCoefficients::from_values(values, 1, grid, 0.0).unwrap();
        let fit = spot_local_linear(&stats, 0.4, Some(1e-12)).unwrap();
        for (k, v) in fit.values.iter().enumerate() {
            let expect = 2.0 + 3.0 * grid.block_center(k);
            assert!((v - expect).abs() < 1e-10, "block {k}: {v} vs {expect}");
        }
    }

    #[test]
    fn local_linear_keeps_constant_responses() {
        let stats = idealized_stats(&[0.7; 10], 100, 1, 0.0);
        let fit = spot_local_linear(&stats, 0.35, Some(1e-12)).unwrap();
        for v in &fit.values {
            assert!((v - 0.7).abs() < 1e-12);
        }
    }

    #[test]
    fn local_linear_needs_two_blocks_per_window() {
        let stats = idealized_stats(&[1.0; 10], 100, 1, 0.0);
        assert!(spot_local_linear(&stats, 0.06, None).is_err());
    }

    #[test]
    fn floor_clamps_nonpositive_values() {
        let (vals, floor) = apply_spot_floor(&[1e-2, -5.0, 4e-2], None);
        assert!((floor - 1e-5).abs() < 1e-18);
        assert_eq!(vals[1], floor);
        assert_eq!(vals[0], 1e-2);
        let (vals, floor) = apply_spot_floor(&[-1.0, -2.0], None);
        assert_eq!(floor, 1e-8);
        assert!(vals.iter().all(|&v| v == 1e-8));
    }

    // --- integrated volatility ---

    #[test]
    fn idealized_inputs_give_block_riemann_sum() {
        let spot = [0.5, 1.0, 1.5, 2.0, 2.5];
        let n = 100;
        let j_max = 7;
        let delta = 0.02;
        let stats = idealized_stats(&spot, n, j_max, delta);
        let config = basic_config(n, spot.len(), j_max, delta)
            .with_weight_mode(WeightMode::Oracle);
        let weights = compute_weights(&spot, config.h0, j_max).unwrap();
        let got = estimate_iv(&stats, &weights, &config, None).unwrap();
        let expect = spot.iter().sum::<f64>() * 0.2;
        assert!(
            (got.iv_hat - expect).abs() < 1e-12 * expect,
            "{} vs {expect}",
            got.iv_hat
        );
        assert!(got.asymptotic_sd.is_none());
    }

    #[test]
    fn dimension_mismatch_is_a_config_error() {
        let stats = idealized_stats(&[1.0, 1.0], 20, 3, 0.1);
        let config = basic_config(20, 2, 3, 0.1);
        let bad_weights = compute_weights(&[1.0, 1.0, 1.0], config.h0, 3).unwrap();
        assert!(matches!(
            estimate_iv(&stats, &bad_weights, &config, None),
            Err(Error::Config { .. })
        ));
        let bad_config = basic_config(20, 2, 2, 0.1);
        let weights = compute_weights(&[1.0, 1.0], bad_config.h0, 2).unwrap();
        assert!(estimate_iv(&stats, &weights, &bad_config, None).is_err());
    }

    #[test]
    fn oracle_mode_requires_reference() {
        let curve = VolatilityCurve::constant(1.0).unwrap();
        let obs = crate::sim::simulate_observations(&curve, 60, 0.01, 5).unwrap();
        let config = basic_config(60, 3, 4, 0.01).with_weight_mode(WeightMode::Oracle);
        assert!(estimate_iv_from_series(&obs, &config, None).is_err());
        assert!(estimate_iv_from_series(&obs, &config, Some(&curve)).is_ok());
    }

    #[test]
    fn exact_correction_removes_noise_bias_in_expectation() {
        // Replace y^2 by its exact discrete mean under pure noise; the
        // exact-mode estimate must vanish identically.
        let n = 60;
        let blocks = 3;
        let j_max = 5;
        let delta = 0.3;
        let grid = BlockGrid::new(n, blocks).unwrap();
        let table = BlockWeights::new(grid, j_max).unwrap();
        let mut values = Vec::new();
        for k in 0..blocks {
            for j in 1..=j_max {
                values.push((delta * delta * table.noise_transfer(j, k)).sqrt());
            }
        }
        let stats = SpectralCoefficients::from_values(values, j_max, grid, delta).unwrap();
        let config = basic_config(n, blocks, j_max, delta)
            .with_bias_correction(BiasCorrection::Exact);
        let weights = compute_weights(&[1.0; 3], config.h0, j_max).unwrap();
        let got = estimate_iv(&stats, &weights, &config, None).unwrap();
        assert!(got.iv_hat.abs() < 1e-15, "residual bias {}", got.iv_hat);
    }

    // --- asymptotics and diagnostics ---

    #[test]
    fn asymptotic_sd_unit_case() {
        let curve = VolatilityCurve::constant(1.0).unwrap();
        let got = asymptotic_sd(&curve, 1.0, 1);
        assert!((got - 8f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn asymptotic_sd_scales_with_n() {
        let curve = VolatilityCurve::shifted_quartic(0.02, 0.2, 0.5).unwrap();
        let a = asymptotic_sd(&curve, 0.01, 1000);
        let b = asymptotic_sd(&curve, 0.01, 16_000);
        assert!((a / b - 2.0).abs() < 1e-12);
    }

    #[test]
    fn asymptotic_sd_figure_configuration() {
        let curve = VolatilityCurve::shifted_quartic(0.02, 0.2, 0.5).unwrap();
        let got = asymptotic_sd(&curve, 0.01, 30_000);
        let expect = (30_000f64).powf(-0.25) * (8.0 * 0.01 * 1.2192e-5f64).sqrt();
        assert!((got - expect).abs() < 1e-9, "{got} vs {expect}");
    }

    #[test]
    fn efficiency_gap_is_one_for_constant_curves() {
        let curve = VolatilityCurve::constant(0.37).unwrap();
        assert!((efficiency_gap_ratio(&curve) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn cutoff_rule_degenerates_to_block_samples() {
        assert_eq!(default_frequency_cutoff(1.0, 0.1, 0.0, 100), 10);
        assert_eq!(default_frequency_cutoff(0.0325, 1.0 / 30.0, 0.01, 30_000), 1);
    }

    // --- maximum likelihood ---

    #[test]
    fn single_frequency_equation_closes() {
        let h = 0.25;
        let eps2 = 1e-6;
        let y = 0.01;
        let direct = (PI / h).powi(2) * (y * y - eps2);
        let out = mle_refine(&[y], direct.max(1e-4), h, 50.0, eps2, &MleOptions::default())
            .unwrap();
        assert!(out.converged);
        assert!((out.sigma2 - direct).abs() < 1e-12, "{} vs {direct}", out.sigma2);
    }

    #[test]
    fn fixed_point_is_returned_unchanged() {
        // Idealized means make every frequency report the same variance, so
        // the true value solves the equation exactly.
        let theta = 0.04;
        let h = 0.2;
        let h0 = 40.0;
        let eps2 = (h / h0) * (h / h0);
        let y: Vec<f64> = (1..=6)
            .map(|j| theoretical_variance(theta, j, h, h / h0).sqrt())
            .collect();
        let out = mle_refine(&y, theta, h, h0, eps2, &MleOptions::default()).unwrap();
        assert!(out.converged);
        assert_eq!(out.iterations, 0);
        assert_eq!(out.sigma2, theta);
    }

    #[test]
    fn converges_to_idealized_variance_from_poor_start() {
        let theta = 0.04;
        let h = 0.2;
        let h0 = 40.0;
        let eps2 = (h / h0) * (h / h0);
        let y: Vec<f64> = (1..=6)
            .map(|j| theoretical_variance(theta, j, h, h / h0).sqrt())
            .collect();
        let out = mle_refine(&y, 0.01, h, h0, eps2, &MleOptions::default()).unwrap();
        assert!(out.converged);
        assert!((out.sigma2 - theta).abs() < 1e-8, "got {}", out.sigma2);
        // One Newton step from a nearby start also lands on the solution.
        let newton = mle_newton_step(&y, 0.035, h, h0, eps2).unwrap();
        assert!((newton - theta).abs() < 1e-10, "newton {newton}");
    }

    #[test]
    fn runaway_iterates_are_projected() {
        // Absurd statistics drive the fixed point far above the cap.
        let opts = MleOptions { upper: 1e-3, ..MleOptions::default() };
        let out = mle_refine(&[10.0], 1e-4, 0.5, 10.0, 0.0, &opts).unwrap();
        assert!(!out.converged);
        assert!(out.sigma2 <= 1e-3);
    }
}
