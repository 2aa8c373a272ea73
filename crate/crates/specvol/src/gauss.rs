//! Hellinger distances between Gaussian laws and the covariance
//! constructions used to verify the regression/white-noise comparison
//! numerically.
//!
//! For `P = N(mu1, S1)` and `Q = N(mu2, S2)` the squared distance is
//!
//! ```text
//! H^2 = 2 - 2 det(S1)^(1/4) det(S2)^(1/4) det(M)^(-1/2)
//!           exp(-(mu1-mu2)' M^(-1) (mu1-mu2) / 8),    M = (S1+S2)/2,
//! ```
//!
//! evaluated through Cholesky log-determinants. Alongside the exact value
//! come the Hilbert-Schmidt style upper bounds
//!
//! ```text
//! H^2 <= 2 ||S1^(-1/2)(S2-S1)S1^(-1/2)||_HS^2                 (equal means)
//! H^2 <= 1/4 ||S1^(-1/2)(mu1-mu2)||^2                         (equal covs)
//! H^2 <= 4 ||S1^(-1/2)(mu1-mu2)||^2 + 1/2 ||...||_HS^2        (combined)
//! ```
//!
//! The combined bound is perturbative: it holds once the spectrum of
//! `S1^(-1/2) S2 S1^(-1/2)` stays within roughly `[1/4, 7/4]`, which the
//! random-pair generator below guarantees.

use crate::curve::VolatilityCurve;
use crate::error::{Error, Result};
use crate::rng::Rng;

const PI: f64 = std::f64::consts::PI;

/// Largest supported dimension for exact computations.
pub const MAX_DIM: usize = 512;

/// Grid resolution for sup-norm scans.
const SUP_SCAN_POINTS: usize = 10_000;

/// A finite-dimensional Gaussian law with positive-definite covariance.
///
/// Construction factorizes the covariance; failure of the factorization is
/// the positive-definiteness check.
#[derive(Debug, Clone)]
pub struct GaussianLaw {
    dim: usize,
    mean: Vec<f64>,
    cov: Vec<f64>,
    chol: Vec<f64>,
    log_det: f64,
}

impl GaussianLaw {
    /// Wrap a mean vector and a row-major covariance matrix.
    pub fn new(mean: Vec<f64>, cov: Vec<f64>) -> Result<Self> {
        let dim = mean.len();
        if dim == 0 || dim > MAX_DIM {
            return Err(Error::invalid(format!("dimension must lie in 1..={MAX_DIM}, got {dim}")));
        }
        if cov.len() != dim * dim {
            return Err(Error::invalid(format!(
                "covariance must be {dim} x {dim}, got {} entries",
                cov.len()
            )));
        }
        let scale = cov.iter().fold(1.0f64, |acc, &v| acc.max(v.abs()));
        for i in 0..dim {
            for j in 0..i {
                if (cov[i * dim + j] - cov[j * dim + i]).abs() > 1e-12 * scale {
                    return Err(Error::invalid(format!(
                        "covariance is not symmetric at ({i}, {j})"
                    )));
                }
            }
        }
        let chol = cholesky(dim, &cov)?;
        let log_det = 2.0 * (0..dim).map(|i| chol[i * dim + i].ln()).sum::<f64>();
        Ok(GaussianLaw { dim, mean, cov, chol, log_det })
    }

    /// Centered law.
    pub fn centered(cov: Vec<f64>) -> Result<Self> {
        let dim = (cov.len() as f64).sqrt() as usize;
        Self::new(vec![0.0; dim], cov)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn mean(&self) -> &[f64] {
        &self.mean
    }

    pub fn cov(&self) -> &[f64] {
        &self.cov
    }

    pub fn cov_at(&self, i: usize, j: usize) -> f64 {
        self.cov[i * self.dim + j]
    }

    /// Solve `cov * x = b` through the stored factor.
    fn solve(&self, b: &[f64]) -> Vec<f64> {
        let d = self.dim;
        let l = &self.chol;
        let mut x = b.to_vec();
        for i in 0..d {
            let mut s = x[i];
            for k in 0..i {
                s -= l[i * d + k] * x[k];
            }
            x[i] = s / l[i * d + i];
        }
        for i in (0..d).rev() {
            let mut s = x[i];
            for k in i + 1..d {
                s -= l[k * d + i] * x[k];
            }
            x[i] = s / l[i * d + i];
        }
        x
    }

    /// Direct sum of independent laws (block-diagonal covariance).
    pub fn product(factors: &[GaussianLaw]) -> Result<GaussianLaw> {
        let dim: usize = factors.iter().map(|f| f.dim).sum();
        let mut mean = Vec::with_capacity(dim);
        let mut cov = vec![0.0; dim * dim];
        let mut offset = 0;
        for f in factors {
            mean.extend_from_slice(&f.mean);
            for i in 0..f.dim {
                for j in 0..f.dim {
                    cov[(offset + i) * dim + (offset + j)] = f.cov_at(i, j);
                }
            }
            offset += f.dim;
        }
        GaussianLaw::new(mean, cov)
    }
}

fn cholesky(dim: usize, a: &[f64]) -> Result<Vec<f64>> {
    let mut l = vec![0.0; dim * dim];
    for i in 0..dim {
        for j in 0..=i {
            let mut s = a[i * dim + j];
            for k in 0..j {
                s -= l[i * dim + k] * l[j * dim + k];
            }
            if i == j {
                if !(s > 0.0) || !s.is_finite() {
                    return Err(Error::NotPositiveDefinite {
                        message: format!("pivot {s} at row {i}"),
                    });
                }
                l[i * dim + i] = s.sqrt();
            } else {
                l[i * dim + j] = s / l[j * dim + j];
            }
        }
    }
    Ok(l)
}

fn check_dims(p: &GaussianLaw, q: &GaussianLaw) -> Result<()> {
    if p.dim != q.dim {
        return Err(Error::config(format!("dimension mismatch: {} vs {}", p.dim, q.dim)));
    }
    Ok(())
}

/// Exact Hellinger distance `H(p, q)` in `[0, sqrt(2)]`.
pub fn hellinger_exact(p: &GaussianLaw, q: &GaussianLaw) -> Result<f64> {
    check_dims(p, q)?;
    let d = p.dim;
    let mid: Vec<f64> = p
        .cov
        .iter()
        .zip(&q.cov)
        .map(|(a, b)| 0.5 * (a + b))
        .collect();
    let chol_mid = cholesky(d, &mid)?;
    let log_det_mid = 2.0 * (0..d).map(|i| chol_mid[i * d + i].ln()).sum::<f64>();
    let diff: Vec<f64> = (0..d).map(|i| p.mean[i] - q.mean[i]).collect();
    // (mu1 - mu2)' M^(-1) (mu1 - mu2) via the factor of M.
    let quadratic = {
        let mid_law = GaussianLaw {
            dim: d,
            mean: vec![0.0; d],
            cov: mid,
            chol: chol_mid,
            log_det: log_det_mid,
        };
        let solved = mid_law.solve(&diff);
        diff.iter().zip(&solved).map(|(a, b)| a * b).sum::<f64>()
    };
    let log_bc =
        0.25 * (p.log_det + q.log_det) - 0.5 * log_det_mid - 0.125 * quadratic;
    let h2 = (-2.0 * log_bc.exp_m1()).clamp(0.0, 2.0);
    Ok(h2.sqrt())
}

/// Upper bounds on the squared Hellinger distance.
#[derive(Debug, Clone, Copy)]
pub struct HellingerBounds {
    /// Combined mean/covariance bound
    /// `4 ||S1^(-1/2) dmu||^2 + 1/2 ||S1^(-1/2)(S2-S1)S1^(-1/2)||_HS^2`.
    pub general: f64,
    /// Pure covariance bound `2 ||S1^(-1/2)(S2-S1)S1^(-1/2)||_HS^2`.
    pub covariance: f64,
    /// Pure mean bound `1/4 ||S1^(-1/2) dmu||^2`.
    pub mean: f64,
}

/// Evaluate the Hilbert-Schmidt bounds; the relative perturbation is
/// measured against the covariance of `p`.
pub fn hellinger_bound(p: &GaussianLaw, q: &GaussianLaw) -> Result<HellingerBounds> {
    check_dims(p, q)?;
    let d = p.dim;
    // B = S1^(-1) (S2 - S1), column by column; the HS norm of the
    // symmetrized perturbation is tr(B^2) = sum_ij B_ij B_ji.
    let mut b = vec![0.0; d * d];
    for j in 0..d {
        let col: Vec<f64> =
            (0..d).map(|i| q.cov[i * d + j] - p.cov[i * d + j]).collect();
        let solved = p.solve(&col);
        for i in 0..d {
            b[i * d + j] = solved[i];
        }
    }
    let mut hs_sq = 0.0;
    for i in 0..d {
        for j in 0..d {
            hs_sq += b[i * d + j] * b[j * d + i];
        }
    }
    let diff: Vec<f64> = (0..d).map(|i| p.mean[i] - q.mean[i]).collect();
    let solved = p.solve(&diff);
    let mean_sq: f64 = diff.iter().zip(&solved).map(|(a, b)| a * b).sum();

    Ok(HellingerBounds {
        general: 4.0 * mean_sq + 0.5 * hs_sq,
        covariance: 2.0 * hs_sq,
        mean: 0.25 * mean_sq,
    })
}

/// Covariance matrices of the discretely observed series and of its
/// window-averaged counterpart, as centered Gaussian laws.
///
/// With `a(t) = int_0^t sigma^2` and the reflection `a(1+s) = a(1-s)`:
///
/// ```text
/// (S_Y)_kl  = a((k ^ l)/n) + delta^2 1(k = l)
/// (S_Yt)_kl = n int over [(2q-1)/2n, (2q+1)/2n] of a(t) dt + delta^2 1(k = l)
/// ```
///
/// with `q = k ^ l`; only the `(n, n)` entry reaches past `t = 1` and uses
/// the reflection.
pub fn regression_covariances(
    curve: &VolatilityCurve,
    n: usize,
    delta: f64,
) -> Result<(GaussianLaw, GaussianLaw)> {
    if n == 0 || n > MAX_DIM {
        return Err(Error::invalid(format!("grid size must lie in 1..={MAX_DIM}, got {n}")));
    }
    let nf = n as f64;
    // a at every half-grid point i/(2n), accumulated from per-interval
    // integrals of sigma^2.
    let mut a_half = vec![0.0; 2 * n + 1];
    for i in 1..=2 * n {
        let lo = (i - 1) as f64 / (2.0 * nf);
        let hi = i as f64 / (2.0 * nf);
        a_half[i] = a_half[i - 1] + curve.integral_sigma2_between(lo, hi);
    }
    // int_x^y a(t) dt = y a(y) - x a(x) - int_x^y t sigma^2(t) dt,
    // with x, y on the half grid.
    let int_a = |x_idx: usize, y_idx: usize| -> f64 {
        let x = x_idx as f64 / (2.0 * nf);
        let y = y_idx as f64 / (2.0 * nf);
        y * a_half[y_idx] - x * a_half[x_idx] - curve.integral_t_sigma2_between(x, y)
    };
    let window: Vec<f64> = (1..=n)
        .map(|k| {
            if k < n {
                nf * int_a(2 * k - 1, 2 * k + 1)
            } else {
                // The last window pokes past t = 1; the reflection
                // a(1 + s) = a(1 - s) folds it onto [1 - 1/2n, 1].
                2.0 * nf * int_a(2 * n - 1, 2 * n)
            }
        })
        .collect();

    let d2 = delta * delta;
    let mut cov_y = vec![0.0; n * n];
    let mut cov_yt = vec![0.0; n * n];
    for k in 0..n {
        for l in 0..n {
            let q = k.min(l);
            cov_y[k * n + l] = a_half[2 * (q + 1)] + if k == l { d2 } else { 0.0 };
            cov_yt[k * n + l] = window[q] + if k == l { d2 } else { 0.0 };
        }
    }
    Ok((GaussianLaw::centered(cov_y)?, GaussianLaw::centered(cov_yt)?))
}

/// `k`-th eigenvalue entering the white-noise comparison:
/// `4 / (4 min sigma1^2 + (2k-1)^2 pi^2 eps^2)`.
pub fn white_noise_eigenvalue(min_sigma2: f64, eps: f64, k: usize) -> f64 {
    let odd = (2 * k - 1) as f64;
    4.0 / (4.0 * min_sigma2 + odd * odd * PI * PI * eps * eps)
}

/// Hellinger-style upper bound between white-noise experiments driven by
/// two volatility curves at noise level `eps`:
/// `sup |sigma1^2 - sigma2^2|` times the l2-norm of the eigenvalue sequence
/// (truncated at `k_max` with an analytic tail bound).
pub fn white_noise_bound(
    curve1: &VolatilityCurve,
    curve2: &VolatilityCurve,
    eps: f64,
    k_max: usize,
) -> Result<f64> {
    if !(eps > 0.0) || !eps.is_finite() {
        return Err(Error::invalid(format!("noise level eps must be positive, got {eps}")));
    }
    if k_max < 1 {
        return Err(Error::invalid("eigenvalue truncation must be >= 1"));
    }
    let mut sup = 0.0f64;
    for i in 0..=SUP_SCAN_POINTS {
        let t = i as f64 / SUP_SCAN_POINTS as f64;
        let d = (curve1.sigma2_unchecked(t) - curve2.sigma2_unchecked(t)).abs();
        sup = sup.max(d);
    }
    let min_sigma2 = curve1.sigma2_min();
    let mut l2_sq = 0.0;
    for k in (1..=k_max).rev() {
        let lam = white_noise_eigenvalue(min_sigma2, eps, k);
        l2_sq += lam * lam;
    }
    let odd = (2 * k_max - 1) as f64;
    l2_sq += 8.0 / (3.0 * PI.powi(4) * eps.powi(4) * odd * odd * odd);
    Ok(sup * l2_sq.sqrt())
}

/// Random mean/covariance pair with the relative spectrum confined to
/// `[1/4, 7/4]`, the regime where every bound in this module applies.
///
/// Used by the verification suite and the CLI `verify hellinger` command.
pub fn sample_perturbed_pair(rng: &mut Rng, dim: usize) -> (GaussianLaw, GaussianLaw) {
    assert!((1..=MAX_DIM).contains(&dim));
    // Base covariance A A' + I/2, comfortably positive definite.
    let mut base = vec![0.0; dim * dim];
    let a: Vec<f64> = (0..dim * dim).map(|_| rng.standard_normal()).collect();
    for i in 0..dim {
        for j in 0..dim {
            let mut s = if i == j { 0.5 } else { 0.0 };
            for k in 0..dim {
                s += a[i * dim + k] * a[j * dim + k];
            }
            base[i * dim + j] = s;
        }
    }
    // Symmetric perturbation S with Frobenius norm <= 3/4, so that the
    // eigenvalues of I + S stay within [1/4, 7/4].
    let g: Vec<f64> = (0..dim * dim).map(|_| rng.standard_normal()).collect();
    let mut s = vec![0.0; dim * dim];
    let mut frob = 0.0;
    for i in 0..dim {
        for j in 0..dim {
            let v = 0.5 * (g[i * dim + j] + g[j * dim + i]);
            s[i * dim + j] = v;
            frob += v * v;
        }
    }
    let scale = 0.75 * rng.uniform_oc() / frob.sqrt().max(1e-12);
    for v in s.iter_mut() {
        *v *= scale;
    }
    let p = GaussianLaw::centered(base).expect("base covariance is positive definite");
    // S2 = L (I + S) L', congruent to I + S relative to S1.
    let l = &p.chol;
    let mut tmp = vec![0.0; dim * dim]; // L * (I + S)
    for i in 0..dim {
        for j in 0..dim {
            let mut acc = 0.0;
            for k in 0..=i {
                let r = if k == j { 1.0 } else { 0.0 } + s[k * dim + j];
                acc += l[i * dim + k] * r;
            }
            tmp[i * dim + j] = acc;
        }
    }
    let mut cov2 = vec![0.0; dim * dim];
    for i in 0..dim {
        for j in 0..dim {
            let mut acc = 0.0;
            for k in 0..=j {
                acc += tmp[i * dim + k] * l[j * dim + k];
            }
            cov2[i * dim + j] = acc;
        }
    }
    // Enforce exact symmetry lost to rounding.
    for i in 0..dim {
        for j in 0..i {
            let v = 0.5 * (cov2[i * dim + j] + cov2[j * dim + i]);
            cov2[i * dim + j] = v;
            cov2[j * dim + i] = v;
        }
    }
    let mean1: Vec<f64> = (0..dim).map(|_| 0.5 * rng.standard_normal()).collect();
    let mean2: Vec<f64> = mean1.iter().map(|m| m + 0.25 * rng.standard_normal()).collect();
    let q = GaussianLaw::new(mean2, cov2).expect("congruent covariance is positive definite");
    (GaussianLaw::new(mean1, p.cov.clone()).unwrap(), q)
}
