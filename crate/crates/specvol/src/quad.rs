//! Adaptive Simpson quadrature.
//!
//! Used for curve moments without a closed form (e.g. third powers of
//! cosine-perturbed curves) and as an independent cross-check in tests.

/// Mandatory refinement levels before convergence checks apply. Oscillatory
/// integrands can alias to a polynomial on the first few dyadic grids;
/// splitting down to 2^6 panels first makes the error estimate see them.
const FORCED_LEVELS: u32 = 6;

/// Levels forced on each segment of a breakpoint-split integral; segments
/// already isolate the integrand's kinks, so light forcing suffices.
const FORCED_LEVELS_SEGMENT: u32 = 3;

const MAX_DEPTH: u32 = 32;

/// Integrate `f` over `[a, b]` with adaptive Simpson refinement.
///
/// The error target is `rel_tol` times the larger of `|integral|` and the
/// L1-size of the integrand, so integrals that cancel to zero resolve to
/// `rel_tol * int |f|` in absolute terms instead of chasing an unreachable
/// relative goal. A roundoff floor on the panel sums backs this up.
pub fn adaptive_simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, rel_tol: f64) -> f64 {
    integrate(f, a, b, rel_tol, FORCED_LEVELS)
}

/// Integrate `f` over `[a, b]` splitting first at the given interior
/// breakpoints (typically kinks of a piecewise integrand).
pub fn adaptive_simpson_with_breakpoints(
    f: &dyn Fn(f64) -> f64,
    a: f64,
    b: f64,
    breakpoints: &[f64],
    rel_tol: f64,
) -> f64 {
    let mut cuts: Vec<f64> = breakpoints
        .iter()
        .copied()
        .filter(|&t| t > a && t < b)
        .collect();
    cuts.sort_by(|x, y| x.partial_cmp(y).unwrap());
    cuts.dedup();

    let mut total = 0.0;
    let mut lo = a;
    for &cut in &cuts {
        total += integrate(f, lo, cut, rel_tol, FORCED_LEVELS_SEGMENT);
        lo = cut;
    }
    total + integrate(f, lo, b, rel_tol, FORCED_LEVELS_SEGMENT)
}

fn integrate(f: &dyn Fn(f64) -> f64, a: f64, b: f64, rel_tol: f64, force: u32) -> f64 {
    if a == b {
        return 0.0;
    }
    let fa = f(a);
    let fb = f(b);
    let m = 0.5 * (a + b);
    let fm = f(m);
    let whole = simpson(a, b, fa, fm, fb);
    let l1 = (b - a).abs() / 6.0 * (fa.abs() + 4.0 * fm.abs() + fb.abs());
    let scale = whole.abs().max(l1).max(1e-300);
    recurse(f, a, b, fa, fm, fb, whole, rel_tol * scale, MAX_DEPTH, force)
}

#[inline]
fn simpson(a: f64, b: f64, fa: f64, fm: f64, fb: f64) -> f64 {
    (b - a) / 6.0 * (fa + 4.0 * fm + fb)
}

#[allow(clippy::too_many_arguments)]
fn recurse(
    f: &dyn Fn(f64) -> f64,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
    force: u32,
) -> f64 {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    let left = simpson(a, m, fa, flm, fm);
    let right = simpson(m, b, fm, frm, fb);
    let delta = left + right - whole;
    if force == 0 {
        // The panel sums carry a few ulps of rounding each; below that
        // level the estimate cannot improve and `delta` is pure noise.
        let noise = 16.0 * f64::EPSILON * (left.abs() + right.abs() + whole.abs());
        if depth == 0 || delta.abs() <= 15.0 * tol || delta.abs() <= noise {
            // Richardson extrapolation of the two half-panel estimates.
            return left + right + delta / 15.0;
        }
    }
    let next_force = force.saturating_sub(1);
    recurse(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1, next_force)
        + recurse(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1, next_force)
}
