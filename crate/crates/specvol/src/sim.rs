//! Exact simulation of the noisy observation model.
//!
//! The latent price is a continuous martingale `X_t = int_0^t sigma(s) dB_s`
//! sampled at `t = i/n` under additive Gaussian measurement error:
//!
//! ```text
//! Y_i = X_(i/n) + eps_i,   eps_i ~ N(0, delta^2) i.i.d.,   i = 1..n
//! ```
//!
//! Increments of `X` over grid cells are independent centered Gaussians whose
//! variances are the exact cell integrals of `sigma^2`, so the sampled path
//! carries no time-discretization bias; estimator experiments measure
//! estimator error only.

use serde::{Deserialize, Serialize};

use crate::curve::VolatilityCurve;
use crate::error::{Error, Result};
use crate::rng::Rng;

/// A simulated (or ingested) observation record.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObservationSeries {
    /// Number of observations.
    pub n: usize,
    /// Noise standard deviation in price units.
    pub delta: f64,
    /// Observed values `Y_1..Y_n`.
    pub values: Vec<f64>,
    /// Seed the series was generated from (0 for ingested data).
    pub seed: u64,
}

impl ObservationSeries {
    /// Wrap externally supplied values, checking the length/finiteness
    /// invariants.
    pub fn from_values(values: Vec<f64>, delta: f64) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::invalid("observation series must be nonempty"));
        }
        if let Some(bad) = values.iter().find(|v| !v.is_finite()) {
            return Err(Error::invalid(format!("observations must be finite, got {bad}")));
        }
        if !(delta >= 0.0) {
            return Err(Error::invalid(format!("noise level delta must be >= 0, got {delta}")));
        }
        Ok(ObservationSeries { n: values.len(), delta, values, seed: 0 })
    }

    /// Observation increments `Y_i - Y_(i-1)` with the convention `Y_0 = 0`.
    pub fn increments(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.n);
        let mut prev = 0.0;
        for &y in &self.values {
            out.push(y - prev);
            prev = y;
        }
        out
    }
}

/// Simulate `n` observations of the model above.
///
/// The draw order is fixed (first the `n` martingale increments, then the
/// `n` noise terms, Box-Muller pairs throughout), so equal
/// `(curve, n, delta, seed)` inputs reproduce the series bit for bit.
pub fn simulate_observations(
    curve: &VolatilityCurve,
    n: usize,
    delta: f64,
    seed: u64,
) -> Result<ObservationSeries> {
    if n < 1 {
        return Err(Error::invalid("sample count n must be >= 1"));
    }
    if !(delta >= 0.0) || !delta.is_finite() {
        return Err(Error::invalid(format!("noise level delta must be >= 0, got {delta}")));
    }

    let mut rng = Rng::new(seed);
    let mut path = Vec::with_capacity(n);
    let mut x = 0.0;
    for i in 1..=n {
        x += rng.normal(curve.cell_variance(i, n));
        path.push(x);
    }
    let mut values = path;
    if delta > 0.0 {
        for y in values.iter_mut() {
            *y += delta * rng.standard_normal();
        }
    }
    Ok(ObservationSeries { n, delta, values, seed })
}
