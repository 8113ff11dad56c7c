//! Monte Carlo kernels under the default rayon pool and a one-thread pool.

use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use kingman_core::convolution::convolve_batches;
use kingman_core::distributions::RayleighLaw;
use kingman_core::fluctuations::harvest_wh_pairs;
use kingman_core::processes::{kl_marginals, uniform_times, SymmetricLevySpec};
use kingman_core::radchf::{radchf_estimate, LevyAtom, LevyPair};
use kingman_core::KingmanOrder;
use rayon::ThreadPool;

fn pools() -> Vec<(&'static str, ThreadPool)> {
    let default = rayon::ThreadPoolBuilder::new().build().expect("pool");
    let single = rayon::ThreadPoolBuilder::new().num_threads(1).build().expect("pool");
    vec![("default", default), ("one-thread", single)]
}

fn batches(c: &mut Criterion) {
    let order = KingmanOrder::new(0.5).unwrap();
    let law = RayleighLaw::new(order);
    let a = law.sample_batch(100_000, 1).unwrap();
    let b = law.sample_batch(100_000, 2).unwrap();
    let mut group = c.benchmark_group("batch");
    for (name, pool) in pools() {
        group.bench_with_input(BenchmarkId::new("sample_rayleigh_1e5", name), &pool, |bench, pool| {
            bench.iter(|| pool.install(|| law.sample_batch(black_box(100_000), 3).unwrap()))
        });
        group.bench_with_input(BenchmarkId::new("convolve_1e5", name), &pool, |bench, pool| {
            bench.iter(|| pool.install(|| convolve_batches(&a, &b, 4).unwrap()))
        });
        group.bench_with_input(BenchmarkId::new("radchf_1e5", name), &pool, |bench, pool| {
            bench.iter(|| pool.install(|| radchf_estimate(&a, black_box(&[2.0])).unwrap()))
        });
    }
    group.finish();
}

fn paths(c: &mut Criterion) {
    let order = KingmanOrder::new(0.5).unwrap();
    let pair = LevyPair::new(order, vec![0.5], vec![LevyAtom { x: vec![1.0], m: 1.0 }]).unwrap();
    let times = uniform_times(1.0, 1e-2).unwrap();
    let spec = SymmetricLevySpec::brownian(1.0).unwrap();
    let mut group = c.benchmark_group("paths");
    group.sample_size(10);
    for (name, pool) in pools() {
        group.bench_with_input(BenchmarkId::new("kl_marginals_1e4", name), &pool, |bench, pool| {
            bench.iter(|| pool.install(|| kl_marginals(&pair, &times, &[1.0], 10_000, 5).unwrap()))
        });
        group.bench_with_input(BenchmarkId::new("wh_harvest_1e4", name), &pool, |bench, pool| {
            bench.iter(|| pool.install(|| harvest_wh_pairs(&spec, 1.0, 10_000, 1e-3, 6).unwrap()))
        });
    }
    group.finish();
}

criterion_group!(benches, batches, paths);
criterion_main!(benches);
