use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};

use specvol::estimators::{estimate_iv_from_series, WeightMode};
use specvol::fisher::fisher_partial;
use specvol::gauss::{hellinger_exact, regression_covariances};
use specvol::spectral::{compute_spectral_stats, BlockGrid};
use specvol_bench::{reference_config, reference_curve, reference_series};

fn bench_simulate(c: &mut Criterion) {
    let curve = reference_curve();
    c.bench_function("simulate_30k", |b| {
        b.iter(|| specvol::simulate_observations(black_box(&curve), 30_000, 0.01, 7).unwrap())
    });
}

fn bench_spectral_stats(c: &mut Criterion) {
    let obs = reference_series();
    let grid = BlockGrid::new(30_000, 30).unwrap();
    c.bench_function("spectral_stats_30k_j43", |b| {
        b.iter(|| compute_spectral_stats(black_box(&obs), grid, 43).unwrap())
    });
}

fn bench_estimate_iv(c: &mut Criterion) {
    let obs = reference_series();
    let curve = reference_curve();
    let adaptive = reference_config(WeightMode::Adaptive);
    let oracle = reference_config(WeightMode::Oracle);
    c.bench_function("estimate_iv_adaptive", |b| {
        b.iter(|| estimate_iv_from_series(black_box(&obs), &adaptive, Some(&curve)).unwrap())
    });
    c.bench_function("estimate_iv_oracle", |b| {
        b.iter(|| estimate_iv_from_series(black_box(&obs), &oracle, Some(&curve)).unwrap())
    });
}

fn bench_fisher_partial(c: &mut Criterion) {
    c.bench_function("fisher_partial_1e5", |b| {
        b.iter(|| fisher_partial(black_box(1.0), 1e3, 100_000).unwrap())
    });
}

fn bench_hellinger(c: &mut Criterion) {
    let curve = reference_curve();
    let (p, q) = regression_covariances(&curve, 64, 1.0).unwrap();
    c.bench_function("hellinger_exact_d64", |b| {
        b.iter(|| hellinger_exact(black_box(&p), black_box(&q)).unwrap())
    });
}

criterion_group!(
    benches,
    bench_simulate,
    bench_spectral_stats,
    bench_estimate_iv,
    bench_fisher_partial,
    bench_hellinger
);
criterion_main!(benches);
