//! Volatility curves on the unit interval.
//!
//! A curve is the ground truth of every experiment in this crate: a strictly
//! positive spot volatility `sigma(t)` for `t in [0, 1]`. Four families are
//! supported:
//!
//! ```text
//! constant              sigma(t) = s
//! shifted-quartic       sigma(t) = a + b (t - c)^4
//! cosine-perturbation   sigma^2(t) = 1 + n^(-alpha) cos(pi n t)
//! tabulated             sigma linear between sorted knots (t_i, sigma_i)
//! ```
//!
//! The cosine family is parameterized in `sigma^2`; the others in `sigma`.
//! Integrals of `sigma^2`, `sigma^3` and `sigma^4` are evaluated in closed
//! form where the family admits one and by adaptive quadrature (relative
//! tolerance 1e-12) otherwise.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quad::{adaptive_simpson, adaptive_simpson_with_breakpoints};

/// Grid resolution of the positivity scan run at construction.
const POSITIVITY_SCAN_POINTS: usize = 10_000;

/// Relative tolerance for quadrature fallbacks.
const QUAD_TOL: f64 = 1e-12;

/// A strictly positive spot-volatility function on `[0, 1]`.
///
/// Construct through [`VolatilityCurve::constant`] and friends, which run a
/// positivity check; values deserialized from untrusted input should be
/// re-checked with [`VolatilityCurve::validate`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum VolatilityCurve {
    Constant {
        sigma: f64,
    },
    ShiftedQuartic {
        a: f64,
        b: f64,
        c: f64,
    },
    CosinePerturbation {
        n_freq: u32,
        alpha: f64,
    },
    Tabulated {
        /// Sorted `(t, sigma)` knots covering `t = 0` and `t = 1`.
        knots: Vec<(f64, f64)>,
    },
}

impl VolatilityCurve {
    /// Constant volatility `sigma(t) = sigma`.
    pub fn constant(sigma: f64) -> Result<Self> {
        let curve = VolatilityCurve::Constant { sigma };
        curve.validate()?;
        Ok(curve)
    }

    /// Bowl-shaped curve `sigma(t) = a + b (t - c)^4`.
    pub fn shifted_quartic(a: f64, b: f64, c: f64) -> Result<Self> {
        let curve = VolatilityCurve::ShiftedQuartic { a, b, c };
        curve.validate()?;
        Ok(curve)
    }

    /// Oscillating variance `sigma^2(t) = 1 + n_freq^(-alpha) cos(pi n_freq t)`.
    pub fn cosine_perturbation(n_freq: u32, alpha: f64) -> Result<Self> {
        let curve = VolatilityCurve::CosinePerturbation { n_freq, alpha };
        curve.validate()?;
        Ok(curve)
    }

    /// Piecewise-linear interpolation of `sigma` through the given knots.
    pub fn tabulated(knots: Vec<(f64, f64)>) -> Result<Self> {
        let curve = VolatilityCurve::Tabulated { knots };
        curve.validate()?;
        Ok(curve)
    }

    /// Tabulated curve without the positivity check.
    ///
    /// Exists so degenerate scenarios (e.g. `sigma == 0`, pure noise) can be
    /// exercised in tests; knots must still be strictly increasing and cover
    /// the unit interval.
    #[doc(hidden)]
    pub fn tabulated_unchecked(knots: Vec<(f64, f64)>) -> Result<Self> {
        validate_knot_layout(&knots)?;
        Ok(VolatilityCurve::Tabulated { knots })
    }

    /// Indistinguishability curve `sigma^2(t) = 1 + n_freq^(-alpha) cos(pi n_freq t)`.
    ///
    /// At the matching sampling grid of size `n_freq`, every cell integral of
    /// `sigma^2` collapses to `1 / n_freq`, so the discrete observation law
    /// coincides with that of constant unit volatility.
    pub fn counterexample(n_freq: u32, alpha: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(Error::invalid(format!(
                "counterexample exponent alpha must lie in (0, 1), got {alpha}"
            )));
        }
        if n_freq < 1 {
            return Err(Error::invalid("counterexample frequency must be >= 1"));
        }
        Self::cosine_perturbation(n_freq, alpha)
    }

    /// Check the strict positivity invariant.
    ///
    /// Scans `sigma^2` on a uniform grid of 10^4 points plus, for tabulated
    /// curves, every knot. Returns the offending `t` on failure.
    pub fn validate(&self) -> Result<()> {
        match self {
            VolatilityCurve::Constant { sigma } => {
                ensure_finite(*sigma, "sigma")?;
            }
            VolatilityCurve::ShiftedQuartic { a, b, c } => {
                ensure_finite(*a, "a")?;
                ensure_finite(*b, "b")?;
                ensure_finite(*c, "c")?;
            }
            VolatilityCurve::CosinePerturbation { n_freq, alpha } => {
                ensure_finite(*alpha, "alpha")?;
                if *n_freq < 1 {
                    return Err(Error::invalid("cosine frequency must be >= 1"));
                }
                if *alpha <= 0.0 {
                    return Err(Error::invalid("cosine exponent alpha must be positive"));
                }
            }
            VolatilityCurve::Tabulated { knots } => {
                validate_knot_layout(knots)?;
                for &(t, sigma) in knots {
                    if !(sigma > 0.0) {
                        return Err(Error::NonPositiveVolatility { t, value: sigma });
                    }
                }
            }
        }
        // Scan the curve's own parameterization: sigma for families given in
        // sigma, sigma^2 for the cosine family (squaring would hide a sign).
        for i in 0..=POSITIVITY_SCAN_POINTS {
            let t = i as f64 / POSITIVITY_SCAN_POINTS as f64;
            let value = match self {
                VolatilityCurve::CosinePerturbation { .. } => self.sigma2_unchecked(t),
                _ => self.sigma(t),
            };
            if !(value > 0.0) || !value.is_finite() {
                return Err(Error::NonPositiveVolatility { t, value });
            }
        }
        Ok(())
    }

    /// Spot volatility `sigma(t)`; `t` must lie in `[0, 1]`.
    pub fn sigma(&self, t: f64) -> f64 {
        match self {
            VolatilityCurve::Constant { sigma } => *sigma,
            VolatilityCurve::ShiftedQuartic { a, b, c } => a + b * (t - c).powi(4),
            VolatilityCurve::CosinePerturbation { .. } => self.sigma2_unchecked(t).sqrt(),
            VolatilityCurve::Tabulated { knots } => interpolate(knots, t),
        }
    }

    /// Spot variance `sigma^2(t)` without the domain check.
    pub(crate) fn sigma2_unchecked(&self, t: f64) -> f64 {
        match self {
            VolatilityCurve::CosinePerturbation { n_freq, alpha } => {
                let m = *n_freq as f64;
                1.0 + m.powf(-alpha) * (std::f64::consts::PI * m * t).cos()
            }
            _ => {
                let s = self.sigma(t);
                s * s
            }
        }
    }

    /// Spot variance `sigma^2(t)`.
    ///
    /// # Errors
    /// `t` outside `[0, 1]` is a domain error.
    pub fn eval_sigma2(&self, t: f64) -> Result<f64> {
        if !(0.0..=1.0).contains(&t) {
            return Err(Error::invalid(format!("time t must lie in [0, 1], got {t}")));
        }
        Ok(self.sigma2_unchecked(t))
    }

    /// Variance mass of grid cell `i` of `n`: the integral of `sigma^2`
    /// over `[(i-1)/n, i/n]`, exact for the closed-form families.
    ///
    /// # Panics
    /// If `i` is outside `1..=n`.
    pub fn cell_variance(&self, i: usize, n: usize) -> f64 {
        assert!(n >= 1, "grid size must be positive");
        assert!((1..=n).contains(&i), "cell index {i} outside 1..={n}");
        let lo = (i - 1) as f64 / n as f64;
        let hi = i as f64 / n as f64;
        self.integral_sigma2_between(lo, hi)
    }

    /// Integrated variance `a(t) = int_0^t sigma^2(s) ds`.
    pub fn integrated_variance(&self, t: f64) -> f64 {
        self.integral_sigma2_between(0.0, t)
    }

    /// The integral of `sigma^2` over `[lo, hi]`.
    pub fn integral_sigma2_between(&self, lo: f64, hi: f64) -> f64 {
        match self {
            VolatilityCurve::Constant { sigma } => sigma * sigma * (hi - lo),
            VolatilityCurve::ShiftedQuartic { a, b, c } => {
                let anti = |t: f64| {
                    let u = t - c;
                    a * a * u + 0.4 * a * b * u.powi(5) + b * b / 9.0 * u.powi(9)
                };
                anti(hi) - anti(lo)
            }
            VolatilityCurve::CosinePerturbation { n_freq, alpha } => {
                let m = *n_freq as f64;
                let pim = std::f64::consts::PI * m;
                let anti = |t: f64| t + m.powf(-alpha) * (pim * t).sin() / pim;
                anti(hi) - anti(lo)
            }
            VolatilityCurve::Tabulated { knots } => {
                let f = |t: f64| self.sigma2_unchecked(t);
                let cuts: Vec<f64> = knots.iter().map(|&(t, _)| t).collect();
                adaptive_simpson_with_breakpoints(&f, lo, hi, &cuts, QUAD_TOL)
            }
        }
    }

    /// Integrated volatility `IV = int_0^1 sigma^2`.
    pub fn integral_sigma2(&self) -> f64 {
        self.integral_sigma2_between(0.0, 1.0)
    }

    /// First time-moment `int_lo^hi t sigma^2(t) dt`; together with the
    /// antiderivative of `sigma^2` this gives window integrals of the
    /// integrated-variance function by parts.
    pub(crate) fn integral_t_sigma2_between(&self, lo: f64, hi: f64) -> f64 {
        match self {
            VolatilityCurve::Constant { sigma } => {
                0.5 * sigma * sigma * (hi * hi - lo * lo)
            }
            VolatilityCurve::ShiftedQuartic { a, b, c } => {
                let anti = |t: f64| {
                    let u = t - c;
                    a * a * (0.5 * u * u + c * u)
                        + 2.0 * a * b * (u.powi(6) / 6.0 + c * u.powi(5) / 5.0)
                        + b * b * (u.powi(10) / 10.0 + c * u.powi(9) / 9.0)
                };
                anti(hi) - anti(lo)
            }
            VolatilityCurve::CosinePerturbation { n_freq, alpha } => {
                let m = *n_freq as f64;
                let q = m.powf(-alpha);
                let w = std::f64::consts::PI * m;
                let anti = |t: f64| {
                    0.5 * t * t + q * (t * (w * t).sin() / w + (w * t).cos() / (w * w))
                };
                anti(hi) - anti(lo)
            }
            VolatilityCurve::Tabulated { knots } => {
                let f = |t: f64| t * self.sigma2_unchecked(t);
                let cuts: Vec<f64> = knots.iter().map(|&(t, _)| t).collect();
                adaptive_simpson_with_breakpoints(&f, lo, hi, &cuts, QUAD_TOL)
            }
        }
    }

    /// Third moment `int_0^1 sigma^3`, which drives the efficient
    /// asymptotic variance.
    pub fn integral_sigma3(&self) -> f64 {
        match self {
            VolatilityCurve::Constant { sigma } => sigma.powi(3),
            VolatilityCurve::ShiftedQuartic { a, b, c } => {
                let anti = |t: f64| {
                    let u = t - c;
                    a.powi(3) * u
                        + 0.6 * a * a * b * u.powi(5)
                        + a * b * b / 3.0 * u.powi(9)
                        + b.powi(3) / 13.0 * u.powi(13)
                };
                anti(1.0) - anti(0.0)
            }
            VolatilityCurve::CosinePerturbation { .. } => {
                let f = |t: f64| self.sigma2_unchecked(t).powf(1.5);
                adaptive_simpson(&f, 0.0, 1.0, QUAD_TOL)
            }
            VolatilityCurve::Tabulated { knots } => {
                let f = |t: f64| interpolate(knots, t).powi(3);
                let cuts: Vec<f64> = knots.iter().map(|&(t, _)| t).collect();
                adaptive_simpson_with_breakpoints(&f, 0.0, 1.0, &cuts, QUAD_TOL)
            }
        }
    }

    /// Quarticity `int_0^1 sigma^4`, the variance driver of globally tuned
    /// quadratic-form estimators.
    pub fn integral_sigma4(&self) -> f64 {
        match self {
            VolatilityCurve::Constant { sigma } => sigma.powi(4),
            VolatilityCurve::ShiftedQuartic { a, b, c } => {
                let anti = |t: f64| {
                    let u = t - c;
                    a.powi(4) * u
                        + 0.8 * a.powi(3) * b * u.powi(5)
                        + 2.0 / 3.0 * a * a * b * b * u.powi(9)
                        + 4.0 / 13.0 * a * b.powi(3) * u.powi(13)
                        + b.powi(4) / 17.0 * u.powi(17)
                };
                anti(1.0) - anti(0.0)
            }
            VolatilityCurve::CosinePerturbation { n_freq, alpha } => {
                // (1 + c cos(pi m t))^2 integrates in closed form.
                let m = *n_freq as f64;
                let c = m.powf(-alpha);
                let pim = std::f64::consts::PI * m;
                let anti = |t: f64| {
                    t + 2.0 * c * (pim * t).sin() / pim
                        + c * c * (0.5 * t + (2.0 * pim * t).sin() / (4.0 * pim))
                };
                anti(1.0) - anti(0.0)
            }
            VolatilityCurve::Tabulated { knots } => {
                let f = |t: f64| interpolate(knots, t).powi(4);
                let cuts: Vec<f64> = knots.iter().map(|&(t, _)| t).collect();
                adaptive_simpson_with_breakpoints(&f, 0.0, 1.0, &cuts, QUAD_TOL)
            }
        }
    }

    /// Maximum of `sigma` over the positivity-scan grid.
    pub fn sigma_max(&self) -> f64 {
        (0..=POSITIVITY_SCAN_POINTS)
            .map(|i| self.sigma(i as f64 / POSITIVITY_SCAN_POINTS as f64))
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// Minimum of `sigma^2` over the positivity-scan grid.
    pub fn sigma2_min(&self) -> f64 {
        (0..=POSITIVITY_SCAN_POINTS)
            .map(|i| self.sigma2_unchecked(i as f64 / POSITIVITY_SCAN_POINTS as f64))
            .fold(f64::INFINITY, f64::min)
    }
}

fn ensure_finite(value: f64, name: &str) -> Result<()> {
    if value.is_finite() {
        Ok(())
    } else {
        Err(Error::invalid(format!("parameter {name} must be finite, got {value}")))
    }
}

fn validate_knot_layout(knots: &[(f64, f64)]) -> Result<()> {
    if knots.len() < 2 {
        return Err(Error::invalid("tabulated curve needs at least two knots"));
    }
    for &(t, sigma) in knots {
        if !t.is_finite() || !sigma.is_finite() {
            return Err(Error::invalid("tabulated knots must be finite"));
        }
    }
    if knots[0].0 != 0.0 || knots[knots.len() - 1].0 != 1.0 {
        return Err(Error::invalid("tabulated knots must cover t = 0 and t = 1"));
    }
    for pair in knots.windows(2) {
        if pair[1].0 <= pair[0].0 {
            return Err(Error::invalid(format!(
                "tabulated knots must be strictly increasing in t near t = {}",
                pair[0].0
            )));
        }
    }
    Ok(())
}

fn interpolate(knots: &[(f64, f64)], t: f64) -> f64 {
    let last = knots.len() - 1;
    if t <= knots[0].0 {
        return knots[0].1;
    }
    if t >= knots[last].0 {
        return knots[last].1;
    }
    // Index of the first knot strictly to the right of t.
    let hi = knots.partition_point(|&(kt, _)| kt <= t);
    let (t0, s0) = knots[hi - 1];
    let (t1, s1) = knots[hi];
    s0 + (s1 - s0) * (t - t0) / (t1 - t0)
}
