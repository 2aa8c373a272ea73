//! Shared fixtures for the pipeline benchmarks.

use specvol::estimators::{EstimatorConfig, WeightMode};
use specvol::{ObservationSeries, VolatilityCurve};

/// Bowl-shaped reference curve used across the benchmarks.
pub fn reference_curve() -> VolatilityCurve {
    VolatilityCurve::shifted_quartic(0.02, 0.2, 0.5).unwrap()
}

/// One simulated trading day at one observation per second.
pub fn reference_series() -> ObservationSeries {
    specvol::simulate_observations(&reference_curve(), 30_000, 0.01, 7).unwrap()
}

/// The matching estimator configuration (30 blocks, J = 43).
pub fn reference_config(mode: WeightMode) -> EstimatorConfig {
    EstimatorConfig::new(30_000, 30, 43, 0.01)
        .unwrap()
        .with_weight_mode(mode)
}
