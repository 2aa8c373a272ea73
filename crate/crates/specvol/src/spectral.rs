//! Localized trigonometric system and block spectral statistics.
//!
//! The unit interval is split into `K = 1/h` blocks. On block `k` the
//! frequency-`j` pair of basis functions is
//!
//! ```text
//! phi_jk(t) = sqrt(2/h) cos(j pi (t - kh)/h)            on [kh, (k+1)h]
//! Phi_jk(t) = sqrt(2h)/(pi j) sin(j pi (t - kh)/h)      on [kh, (k+1)h]
//! ```
//!
//! with `Phi_jk' = phi_jk`, both vanishing outside the block. The statistic
//! extracted from a discrete series is a weighted sum of its increments,
//!
//! ```text
//! y_jk = sum_i c_i (Y_i - Y_(i-1)),   c_i = -n int_((i-1)/n)^(i/n) Phi_jk ,
//! ```
//!
//! with `Y_0 := 0`. The weights come from the sine antiderivative in closed
//! form; no quadrature is involved. Since block boundaries fall on grid
//! points, the weight vector depends only on `j` and the cell offset within
//! a block, so one table serves every block of a grid.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sim::ObservationSeries;

/// Uniform block layout: `blocks` blocks of length `h = 1/blocks` over a
/// sampling grid of `n` points, with `n` divisible by `blocks`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BlockGrid {
    n: usize,
    blocks: usize,
}

impl BlockGrid {
    /// Build a grid, enforcing `blocks >= 1`, `blocks | n` and at least two
    /// samples per block.
    pub fn new(n: usize, blocks: usize) -> Result<Self> {
        if blocks == 0 {
            return Err(Error::invalid("block count must be >= 1"));
        }
        if n == 0 || !n.is_multiple_of(blocks) {
            return Err(Error::invalid(format!(
                "sample count {n} must be a positive multiple of the block count {blocks}"
            )));
        }
        if n / blocks < 2 {
            return Err(Error::invalid(format!(
                "blocks need at least two samples, got n/blocks = {}",
                n / blocks
            )));
        }
        Ok(BlockGrid { n, blocks })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Number of blocks `K = 1/h`.
    pub fn blocks(&self) -> usize {
        self.blocks
    }

    /// Block length `h`.
    pub fn h(&self) -> f64 {
        1.0 / self.blocks as f64
    }

    /// Samples per block `n h`.
    pub fn samples_per_block(&self) -> usize {
        self.n / self.blocks
    }

    /// Center of block `k`.
    pub fn block_center(&self, k: usize) -> f64 {
        (k as f64 + 0.5) * self.h()
    }
}

/// Evaluate the basis pair `(phi_jk(t), Phi_jk(t))`; zero outside the block.
pub fn basis_eval(j: usize, k: usize, h: f64, t: f64) -> (f64, f64) {
    assert!(j >= 1, "frequency must be >= 1");
    assert!(h > 0.0, "block length must be positive");
    let lo = k as f64 * h;
    let hi = lo + h;
    if t < lo || t > hi {
        return (0.0, 0.0);
    }
    let arg = j as f64 * std::f64::consts::PI * (t - lo) / h;
    let phi = (2.0 / h).sqrt() * arg.cos();
    let cap = (2.0 * h).sqrt() / (std::f64::consts::PI * j as f64) * arg.sin();
    (phi, cap)
}

/// Increment weights for all frequencies `1..=j_max` of one block layout.
///
/// `table[j-1][r]` is the weight of the `r`-th cell of any block at
/// frequency `j`; the same values apply to block `k` at global cells
/// `k m + r` with `m` samples per block.
#[derive(Debug, Clone)]
pub struct BlockWeights {
    grid: BlockGrid,
    table: Vec<Vec<f64>>,
}

impl BlockWeights {
    /// Compute the weight table. Frequencies above the per-block sample
    /// count are rejected: the discrete grid carries no information there.
    pub fn new(grid: BlockGrid, j_max: usize) -> Result<Self> {
        if j_max < 1 {
            return Err(Error::invalid("frequency cut-off must be >= 1"));
        }
        let m = grid.samples_per_block();
        if j_max > m {
            return Err(Error::invalid(format!(
                "frequency cut-off {j_max} exceeds the {m} samples per block"
            )));
        }
        let h = grid.h();
        let n = grid.n as f64;
        let mut table = Vec::with_capacity(j_max);
        for j in 1..=j_max {
            let jf = j as f64;
            let scale = n * (2.0 * h).sqrt() * h / (std::f64::consts::PI.powi(2) * jf * jf);
            let step = jf * std::f64::consts::PI / m as f64;
            let mut row = Vec::with_capacity(m);
            let mut prev = 1.0; // cos(0)
            for r in 1..=m {
                let next = (step * r as f64).cos();
                row.push(scale * (next - prev));
                prev = next;
            }
            table.push(row);
        }
        Ok(BlockWeights { grid, table })
    }

    pub fn grid(&self) -> BlockGrid {
        self.grid
    }

    pub fn j_max(&self) -> usize {
        self.table.len()
    }

    /// Per-cell weights of one block at frequency `j`.
    pub fn block_row(&self, j: usize) -> &[f64] {
        &self.table[j - 1]
    }

    /// Noise transfer factor of the statistic `y_jk`: the squared norm of
    /// the coefficients that hit the noise terms after telescoping the
    /// increments, `sum_i (c_i - c_(i+1))^2` with `c_(n+1) = 0`.
    ///
    /// Multiplied by `delta^2` this is the exact noise variance of `y_jk`.
    /// Block 0 lacks the leading boundary term because `Y_0 := 0`
    /// contributes no noise.
    pub fn noise_transfer(&self, j: usize, k: usize) -> f64 {
        let row = self.block_row(j);
        let m = row.len();
        let mut sum = if k > 0 { row[0] * row[0] } else { 0.0 };
        for r in 0..m - 1 {
            let d = row[r] - row[r + 1];
            sum += d * d;
        }
        sum + row[m - 1] * row[m - 1]
    }
}

/// Full-length weight vector `c_1..c_n` for the statistic `y_jk`; zero
/// outside block `k`.
pub fn discrete_weights(j: usize, k: usize, grid: BlockGrid) -> Result<Vec<f64>> {
    if k >= grid.blocks() {
        return Err(Error::invalid(format!(
            "block index {k} outside 0..{}",
            grid.blocks()
        )));
    }
    let weights = BlockWeights::new(grid, j)?;
    let m = grid.samples_per_block();
    let mut out = vec![0.0; grid.n()];
    out[k * m..(k + 1) * m].copy_from_slice(weights.block_row(j));
    Ok(out)
}

/// Block spectral statistics `y_jk` for `j = 1..=j_max`, `k = 0..K-1`,
/// together with the grid metadata needed by the estimators.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralCoefficients {
    values: Vec<f64>, // block-major: values[k * j_max + (j - 1)]
    j_max: usize,
    grid: BlockGrid,
    delta: f64,
}

impl SpectralCoefficients {
    /// Assemble coefficients computed elsewhere (synthetic inputs, tests).
    pub fn from_values(
        values: Vec<f64>,
        j_max: usize,
        grid: BlockGrid,
        delta: f64,
    ) -> Result<Self> {
        if values.len() != j_max * grid.blocks() {
            return Err(Error::config(format!(
                "expected {} x {} coefficients, got {}",
                j_max,
                grid.blocks(),
                values.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("spectral coefficients must be finite"));
        }
        Ok(SpectralCoefficients { values, j_max, grid, delta })
    }

    /// The statistic `y_jk` (`j` is 1-based, `k` 0-based).
    pub fn y(&self, j: usize, k: usize) -> f64 {
        debug_assert!((1..=self.j_max).contains(&j));
        debug_assert!(k < self.grid.blocks());
        self.values[k * self.j_max + (j - 1)]
    }

    pub fn j_max(&self) -> usize {
        self.j_max
    }

    pub fn grid(&self) -> BlockGrid {
        self.grid
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn n(&self) -> usize {
        self.grid.n()
    }

    /// Idealized noise level of the continuous embedding, `eps = delta/sqrt(n)`.
    pub fn eps2(&self) -> f64 {
        self.delta * self.delta / self.grid.n() as f64
    }
}

/// Compute all statistics `y_jk` of a series on the given block layout.
pub fn compute_spectral_stats(
    obs: &ObservationSeries,
    grid: BlockGrid,
    j_max: usize,
) -> Result<SpectralCoefficients> {
    if obs.n != grid.n() {
        return Err(Error::config(format!(
            "series length {} does not match grid sample count {}",
            obs.n,
            grid.n()
        )));
    }
    let weights = BlockWeights::new(grid, j_max)?;
    let increments = obs.increments();
    let m = grid.samples_per_block();
    let blocks = grid.blocks();

    let mut values = vec![0.0; j_max * blocks];
    for k in 0..blocks {
        let cell = &increments[k * m..(k + 1) * m];
        let out = &mut values[k * j_max..(k + 1) * j_max];
        for j in 1..=j_max {
            let row = weights.block_row(j);
            let mut acc = 0.0;
            for r in 0..m {
                acc += row[r] * cell[r];
            }
            out[j - 1] = acc;
        }
    }
    SpectralCoefficients::from_values(values, j_max, grid, obs.delta)
}

/// Idealized variance of `y_jk` when the block variance level is `sigma2`
/// and the continuous-embedding noise level is `eps`:
/// `h^2 sigma2 / (pi j)^2 + eps^2`.
pub fn theoretical_variance(sigma2: f64, j: usize, h: f64, eps: f64) -> f64 {
    let jf = j as f64 * std::f64::consts::PI;
    h * h / (jf * jf) * sigma2 + eps * eps
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::curve::VolatilityCurve;
    use crate::quad::adaptive_simpson;
    use crate::sim::simulate_observations;

    // --- grid ---

    #[test]
    fn grid_rejects_bad_layouts() {
        assert!(BlockGrid::new(100, 0).is_err());
        assert!(BlockGrid::new(100, 7).is_err());
        assert!(BlockGrid::new(30, 30).is_err()); // one sample per block
        assert!(BlockGrid::new(0, 1).is_err());
        let g = BlockGrid::new(30_000, 30).unwrap();
        assert_eq!(g.samples_per_block(), 1000);
        assert!((g.h() - 1.0 / 30.0).abs() < 1e-16);
    }

    // --- basis ---

    #[test]
    fn basis_vanishes_at_cosine_zero() {
        let (phi, _) = basis_eval(1, 0, 1.0, 0.5);
        assert!(phi.abs() < 1e-15);
    }

    #[test]
    fn basis_vanishes_outside_block() {
        assert_eq!(basis_eval(3, 1, 0.25, 0.1), (0.0, 0.0));
        assert_eq!(basis_eval(3, 1, 0.25, 0.9), (0.0, 0.0));
    }

    #[test]
    fn basis_is_l2_normalized() {
        for (j, k, h) in [(1usize, 0usize, 1.0), (3, 2, 0.25)] {
            let f = |t: f64| {
                let (phi, _) = basis_eval(j, k, h, t);
                phi * phi
            };
            let norm = adaptive_simpson(&f, k as f64 * h, (k + 1) as f64 * h, 1e-12);
            assert!((norm - 1.0).abs() < 1e-10, "j={j} k={k}: {norm}");
        }
    }

    #[test]
    fn basis_gram_matrix_is_identity() {
        // Frequencies 1..=5 on one block of a 4-block layout.
        let h = 0.25;
        let k = 1usize;
        for j1 in 1..=5usize {
            for j2 in 1..=5usize {
                let f = |t: f64| basis_eval(j1, k, h, t).0 * basis_eval(j2, k, h, t).0;
                let inner = adaptive_simpson(&f, k as f64 * h, (k + 1) as f64 * h, 1e-12);
                let expect = if j1 == j2 { 1.0 } else { 0.0 };
                assert!((inner - expect).abs() < 1e-8, "({j1},{j2}): {inner}");
            }
        }
    }

    // --- weights ---

    #[test]
    fn two_cell_weights_match_hand_value() {
        let grid = BlockGrid::new(2, 1).unwrap();
        let w = discrete_weights(1, 0, grid).unwrap();
        let expect = -2.0 * std::f64::consts::SQRT_2 / std::f64::consts::PI.powi(2);
        assert!((w[0] - expect).abs() < 1e-15, "{w:?}");
        assert!((w[1] - expect).abs() < 1e-15);
    }

    #[test]
    fn even_frequency_weights_sum_to_zero() {
        let grid = BlockGrid::new(120, 4).unwrap();
        for j in [2usize, 4, 6] {
            for k in 0..4 {
                let w = discrete_weights(j, k, grid).unwrap();
                let total: f64 = w.iter().sum();
                assert!(total.abs() < 1e-15, "j={j} k={k}: {total}");
            }
        }
    }

    #[test]
    fn weights_vanish_outside_block() {
        let grid = BlockGrid::new(40, 4).unwrap();
        let w = discrete_weights(3, 2, grid).unwrap();
        assert!(w[..20].iter().all(|&x| x == 0.0));
        assert!(w[30..].iter().all(|&x| x == 0.0));
        assert!(w[20..30].iter().any(|&x| x != 0.0));
    }

    #[test]
    fn weights_match_quadrature_of_antiderivative() {
        // c_i = -n int over cell i of Phi_jk, checked against Simpson.
        let grid = BlockGrid::new(36, 3).unwrap();
        let n = grid.n();
        let h = grid.h();
        for (j, k) in [(1usize, 0usize), (2, 1), (5, 2)] {
            let w = discrete_weights(j, k, grid).unwrap();
            for i in 1..=n {
                let lo = (i - 1) as f64 / n as f64;
                let hi = i as f64 / n as f64;
                let f = |t: f64| basis_eval(j, k, h, t).1;
                let numeric = -(n as f64) * adaptive_simpson(&f, lo, hi, 1e-13);
                assert!(
                    (w[i - 1] - numeric).abs() < 1e-10,
                    "j={j} k={k} i={i}: closed {} vs quad {numeric}",
                    w[i - 1]
                );
            }
        }
    }

    // --- statistics ---

    #[test]
    fn zero_series_gives_zero_matrix() {
        let obs = ObservationSeries { n: 40, delta: 0.0, values: vec![0.0; 40], seed: 0 };
        let grid = BlockGrid::new(40, 4).unwrap();
        let stats = compute_spectral_stats(&obs, grid, 5).unwrap();
        for k in 0..4 {
            for j in 1..=5 {
                assert_eq!(stats.y(j, k), 0.0);
            }
        }
    }

    #[test]
    fn ramp_series_vanishes_at_even_frequencies() {
        // Y_i = i/n has constant increments 1/n, so y_jk = (1/n) sum_i c_i,
        // which is exactly zero for even j.
        let n = 60;
        let values: Vec<f64> = (1..=n).map(|i| i as f64 / n as f64).collect();
        let obs = ObservationSeries::from_values(values, 0.0).unwrap();
        let grid = BlockGrid::new(n, 3).unwrap();
        let stats = compute_spectral_stats(&obs, grid, 6).unwrap();
        for k in 0..3 {
            for j in [2usize, 4, 6] {
                assert!(stats.y(j, k).abs() < 1e-15, "j={j} k={k}: {}", stats.y(j, k));
            }
        }
    }

    #[test]
    fn stats_reject_mismatched_grid() {
        let obs = ObservationSeries { n: 40, delta: 0.0, values: vec![0.0; 40], seed: 0 };
        let grid = BlockGrid::new(60, 3).unwrap();
        assert!(matches!(
            compute_spectral_stats(&obs, grid, 2),
            Err(Error::Config { .. })
        ));
    }

    #[test]
    fn cutoff_above_block_samples_is_rejected() {
        let grid = BlockGrid::new(40, 4).unwrap();
        assert!(BlockWeights::new(grid, 11).is_err());
        assert!(BlockWeights::new(grid, 10).is_ok());
    }

    // --- theoretical variance ---

    #[test]
    fn theoretical_variance_values() {
        assert!((theoretical_variance(std::f64::consts::PI.powi(2), 1, 1.0, 0.0) - 1.0).abs() < 1e-15);
        let got = theoretical_variance(1.0, 2, 0.1, 0.01);
        let expect = 0.01 / (4.0 * std::f64::consts::PI.powi(2)) + 1e-4;
        assert!((got - expect).abs() < 1e-18);
    }

    #[test]
    fn noise_dominates_high_frequencies() {
        let v = theoretical_variance(1.0, 100_000, 0.1, 0.01);
        assert!((v - 1e-4).abs() < 1e-12);
    }

    // --- noise transfer ---

    #[test]
    fn noise_transfer_matches_direct_telescoping() {
        let grid = BlockGrid::new(24, 3).unwrap();
        let weights = BlockWeights::new(grid, 4).unwrap();
        let n = grid.n();
        for j in 1..=4usize {
            for k in 0..3usize {
                let c = discrete_weights(j, k, grid).unwrap();
                let mut direct = 0.0;
                for i in 0..n {
                    let next = if i + 1 < n { c[i + 1] } else { 0.0 };
                    let coeff = c[i] - next;
                    // The i = 0 entry pairs with eps_1; the "previous" noise
                    // of cell 1 is Y_0 = 0, so every i in 0..n contributes.
                    direct += coeff * coeff;
                }
                let fast = weights.noise_transfer(j, k);
                assert!((fast - direct).abs() < 1e-18, "j={j} k={k}");
            }
        }
    }

    #[test]
    fn noise_transfer_approximates_idealized_level() {
        // For m >> j the exact noise variance approaches delta^2 / n.
        let grid = BlockGrid::new(30_000, 30).unwrap();
        let weights = BlockWeights::new(grid, 3).unwrap();
        let per_n = 1.0 / 30_000.0;
        for j in 1..=3usize {
            let got = weights.noise_transfer(j, 5);
            assert!(
                (got - per_n).abs() < 0.01 * per_n,
                "j={j}: {got} vs {per_n}"
            );
        }
    }

    #[test]
    fn monte_carlo_variance_of_first_frequency() {
        // Constant sigma = 1, delta = 0.01: Var(y_1k) should match the
        // idealized h^2/pi^2 + delta^2/n within 3 standard errors.
        let curve = VolatilityCurve::constant(1.0).unwrap();
        let n = 3000;
        let grid = BlockGrid::new(n, 3).unwrap();
        let reps = 800;
        let mut samples = Vec::with_capacity(reps * 3);
        for r in 0..reps {
            let obs = simulate_observations(&curve, n, 0.01, crate::rng::mix(555, r as u64)).unwrap();
            let stats = compute_spectral_stats(&obs, grid, 1).unwrap();
            for k in 0..3 {
                samples.push(stats.y(1, k));
            }
        }
        let m = samples.len() as f64;
        let var = samples.iter().map(|y| y * y).sum::<f64>() / m;
        let expect = theoretical_variance(1.0, 1, grid.h(), 0.01 / (n as f64).sqrt());
        // Var of the sample variance of Gaussians: 2 v^2 / m.
        let se = expect * (2.0 / m).sqrt();
        assert!(
            (var - expect).abs() < 3.0 * se,
            "var {var} vs {expect} (se {se})"
        );
    }
}
