//! Fisher information of the block variance parameter.
//!
//! One block of spectral statistics carries, for the variance parameter
//! `theta` at spectral scale `h0`, the information
//!
//! ```text
//! I(theta) = sum_(j>=1) 1 / (2 (theta + pi^2 j^2 / h0^2)^2)
//!          = h0 / (8 theta^(3/2)) * B(lambda),    lambda = sqrt(theta) h0,
//! ```
//!
//! where `B` is the bracket evaluated by [`bracket`]. The same bracket gives
//! the closed form of the series `sum_j lambda^3 / (lambda^2 + pi^2 j^2)^2`
//! used when passing to the efficient asymptotic variance. As `h0` grows,
//! `I(theta)/h0 -> 1/(8 theta^(3/2))`, the optimal information per unit
//! scale.

use serde::Serialize;

use crate::error::{Error, Result};

const PI: f64 = std::f64::consts::PI;

/// Switch-over point below which the exponential closed form is replaced by
/// its series expansion. The closed form subtracts `2/lambda` from a ratio
/// of the same size; its relative error grows like `eps / lambda^4` and
/// passes 1e-12 around this point.
const SMALL_LAMBDA: f64 = 0.5;

/// `zeta(2m + 4) / pi^(2m + 4)` for `m = 0..9` (rational values).
const ZETA_OVER_PI: [f64; 9] = [
    1.0 / 90.0,
    1.0 / 945.0,
    1.0 / 9450.0,
    1.0 / 93555.0,
    691.0 / 638512875.0,
    2.0 / 18243225.0,
    3617.0 / 325641566250.0,
    43867.0 / 38979295480125.0,
    174611.0 / 1531329465290625.0,
];

/// The bracket `B(lambda) = (1 + 4 lambda e^(-2 lambda) - e^(-4 lambda))
/// / (1 - e^(-2 lambda))^2 - 2/lambda`, equal to
/// `4 lambda^3 sum_j (lambda^2 + pi^2 j^2)^(-2)`.
fn bracket(lambda: f64) -> f64 {
    debug_assert!(lambda > 0.0);
    if lambda < SMALL_LAMBDA {
        // Expand each series term in lambda^2:
        // B = 4 lambda^3 sum_m (-1)^m (m+1) zeta(2m+4)/pi^(2m+4) lambda^(2m);
        // nine terms reach ~5e-14 relative at the switch-over point.
        let l2 = lambda * lambda;
        let mut sum = 0.0;
        let mut power = 1.0;
        for (m, z) in ZETA_OVER_PI.iter().enumerate() {
            let term = (m + 1) as f64 * z * power;
            sum += if m % 2 == 0 { term } else { -term };
            power *= l2;
        }
        return 4.0 * lambda * l2 * sum;
    }
    let e2 = (-2.0 * lambda).exp();
    let e4 = e2 * e2;
    let denom = 1.0 - e2;
    (1.0 + 4.0 * lambda * e2 - e4) / (denom * denom) - 2.0 / lambda
}

fn check_positive(value: f64, name: &str) -> Result<()> {
    if value > 0.0 && value.is_finite() {
        Ok(())
    } else {
        Err(Error::invalid(format!("{name} must be positive and finite, got {value}")))
    }
}

/// Closed-form Fisher information `I(theta)` at spectral scale `h0`.
pub fn fisher_closed(theta: f64, h0: f64) -> Result<f64> {
    check_positive(theta, "theta")?;
    check_positive(h0, "h0")?;
    let lambda = theta.sqrt() * h0;
    Ok(h0 / (8.0 * theta.powf(1.5)) * bracket(lambda))
}

/// Truncated information `sum_(j=1..J) 1 / (2 (theta + pi^2 j^2 / h0^2)^2)`.
///
/// Terms are accumulated from `j = J` down to `j = 1` so the smallest
/// contributions are added first.
pub fn fisher_partial(theta: f64, h0: f64, j_max: usize) -> Result<f64> {
    check_positive(theta, "theta")?;
    check_positive(h0, "h0")?;
    if j_max < 1 {
        return Err(Error::invalid("truncation J must be >= 1"));
    }
    let b = PI * PI / (h0 * h0);
    let mut sum = 0.0;
    for j in (1..=j_max).rev() {
        let jf = j as f64;
        let g = theta + b * jf * jf;
        sum += 0.5 / (g * g);
    }
    Ok(sum)
}

/// Upper bound on the truncation gap `fisher_closed - fisher_partial`:
/// `h0^4 / (6 pi^4 (J - 1/2)^3)`.
pub fn fisher_tail_bound(h0: f64, j_max: usize) -> f64 {
    let j = j_max as f64 - 0.5;
    h0.powi(4) / (6.0 * PI.powi(4) * j * j * j)
}

/// Both sides of the closed-form series evaluation
/// `sum_j lambda^3 / (lambda^2 + pi^2 j^2)^2`.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct SeriesIdentity {
    /// Truncated sum over `j = 1..=j_max` (smallest terms first).
    pub lhs: f64,
    /// Analytic bound on the dropped tail, `lambda^3 / (3 pi^4 (J - 1/2)^3)`.
    pub tail: f64,
    /// Closed form `(1 + 4 lambda e^(-2 lambda) - e^(-4 lambda))
    /// / (4 (1 - e^(-2 lambda))^2) - 1/(2 lambda)`.
    pub rhs: f64,
}

/// Evaluate the series identity at `lambda` with truncation `j_max`.
pub fn series_identity(lambda: f64, j_max: usize) -> Result<SeriesIdentity> {
    check_positive(lambda, "lambda")?;
    if j_max < 1 {
        return Err(Error::invalid("truncation J must be >= 1"));
    }
    let l2 = lambda * lambda;
    let l3 = l2 * lambda;
    let mut lhs = 0.0;
    for j in (1..=j_max).rev() {
        let jf = j as f64;
        let g = l2 + PI * PI * jf * jf;
        lhs += l3 / (g * g);
    }
    let jh = j_max as f64 - 0.5;
    let tail = l3 / (3.0 * PI.powi(4) * jh * jh * jh);
    let rhs = 0.25 * bracket(lambda);
    Ok(SeriesIdentity { lhs, tail, rhs })
}

/// Single-frequency information `I_h0 = h0^3 / (2 (pi^2 + h0^2 sigma0^2)^2)`
/// of the lowest-frequency statistic alone.
pub fn single_freq_info(sigma0: f64, h0: f64) -> f64 {
    let g = PI * PI + h0 * h0 * sigma0 * sigma0;
    0.5 * h0 * h0 * h0 * h0 / h0 / (g * g)
}

/// Optimal scale and information when only the lowest frequency is used.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct SingleFreqOptimum {
    /// Maximizing scale `h0* = sqrt(3) pi / sigma0`.
    pub h0_star: f64,
    /// Information at the optimum, `3^(3/2) / (32 pi) sigma0^(-3)`.
    pub info_star: f64,
    /// Relative efficiency against the all-frequency optimum
    /// `sigma0^(-3)/8`: `sqrt(3^(3/2) / (4 pi)) ~ 0.643`.
    pub efficiency: f64,
}

/// Maximize the single-frequency information over the scale `h0`.
pub fn single_freq_optimum(sigma0: f64) -> Result<SingleFreqOptimum> {
    check_positive(sigma0, "sigma0")?;
    let h0_star = 3f64.sqrt() * PI / sigma0;
    let info_star = 3f64.powf(1.5) / (32.0 * PI) / sigma0.powi(3);
    let best = 0.125 / sigma0.powi(3);
    let efficiency = (info_star / best).sqrt();
    Ok(SingleFreqOptimum { h0_star, info_star, efficiency })
}

/// Summary emitted by the CLI `fisher` subcommand.
#[derive(Debug, Clone, Serialize)]
pub struct FisherReport {
    pub theta: f64,
    pub h0: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub j_max: Option<usize>,
    pub value_closed: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub value_partial: Option<f64>,
    /// Information per unit scale, `I(theta) / h0`.
    pub lan_normalized: f64,
}

impl FisherReport {
    pub fn new(theta: f64, h0: f64, j_max: Option<usize>) -> Result<Self> {
        let value_closed = fisher_closed(theta, h0)?;
        let value_partial = match j_max {
            Some(j) => Some(fisher_partial(theta, h0, j)?),
            None => None,
        };
        Ok(FisherReport {
            theta,
            h0,
            j_max,
            value_closed,
            value_partial,
            lan_normalized: value_closed / h0,
        })
    }
}
