use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use semirank::chain::{DEFAULT_MAX_ITERS, DEFAULT_TOL};
use semirank::{
    build_canonical_markov, build_empirical_markov, fiedler_value, markov_spectral_gap, mmwu_reweight,
    stationary_distribution, stationary_exact, ReweightConfig,
};
use semirank_bench::experiment1_instance;

const SIZES: [usize; 3] = [30, 90, 135];

fn stationary(c: &mut Criterion) {
    let mut group = c.benchmark_group("stationary");
    for n in SIZES {
        let (graph, _, data) = experiment1_instance(n);
        let s = build_empirical_markov(&graph, &data).unwrap();
        group.bench_with_input(BenchmarkId::new("power", n), &s, |b, s| {
            b.iter(|| stationary_distribution(black_box(s), DEFAULT_TOL, DEFAULT_MAX_ITERS))
        });
        group.bench_with_input(BenchmarkId::new("exact", n), &s, |b, s| {
            b.iter(|| stationary_exact(black_box(s)))
        });
    }
    group.finish();
}

fn spectra(c: &mut Criterion) {
    let mut group = c.benchmark_group("spectra");
    for n in SIZES {
        let (graph, model, _) = experiment1_instance(n);
        let s = build_canonical_markov(&graph, &model).unwrap();
        group.bench_with_input(BenchmarkId::new("fiedler", n), &graph, |b, g| {
            b.iter(|| fiedler_value(black_box(g)))
        });
        group.bench_with_input(BenchmarkId::new("markov_gap_reversible", n), &s, |b, s| {
            b.iter(|| markov_spectral_gap(black_box(s), Some(&model)))
        });
        group.bench_with_input(BenchmarkId::new("markov_gap_general", n), &s, |b, s| {
            b.iter(|| markov_spectral_gap(black_box(s), None))
        });
    }
    group.finish();
}

fn reweight(c: &mut Criterion) {
    let mut group = c.benchmark_group("reweight");
    group.sample_size(10);
    for n in SIZES {
        let (graph, _, _) = experiment1_instance(n);
        let cfg = ReweightConfig::default();
        group.bench_with_input(BenchmarkId::new("mmwu", n), &graph, |b, g| {
            b.iter(|| mmwu_reweight(black_box(g), &cfg))
        });
    }
    group.finish();
}

fn sampling(c: &mut Criterion) {
    let mut group = c.benchmark_group("sampling");
    for n in SIZES {
        let (graph, model, _) = experiment1_instance(n);
        group.bench_with_input(BenchmarkId::new("k32", n), &graph, |b, g| {
            b.iter(|| model.sample_comparisons(black_box(g), 32, 5))
        });
    }
    group.finish();
}

criterion_group!(benches, stationary, spectra, reweight, sampling);
criterion_main!(benches);
