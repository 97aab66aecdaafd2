use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use lqs::corpus::{pr_corpus, DEFAULT_SEED};
use lqs::kalman::{kalman_decompose, DEFAULT_RANK_TOL};
use lqs::network::{dpa, grid, DiagonalPlant, Network, Scale, SweepPoint};
use lqs::par::map_seq;
use lqs::spectra::invariant_zeros_pencil;
use std::hint::black_box;

fn zeros(c: &mut Criterion) {
    let corpus = pr_corpus(DEFAULT_SEED, 200, 4, 2);
    let mut g = c.benchmark_group("invariant_zeros_200");
    g.sample_size(20);
    let job = |ss: &lqs::model::StateSpace| invariant_zeros_pencil(ss).map(|z| z.len()).unwrap_or(0);
    g.bench_function(BenchmarkId::new("seq", 200), |b| b.iter(|| map_seq(black_box(&corpus), job)));
    #[cfg(feature = "parallel")]
    g.bench_function(BenchmarkId::new("par", 200), |b| b.iter(|| lqs::par::map_par(black_box(&corpus), job)));
    g.finish();
}

fn kalman(c: &mut Criterion) {
    let corpus = pr_corpus(DEFAULT_SEED, 200, 4, 2);
    let mut g = c.benchmark_group("kalman_200");
    g.sample_size(20);
    let job = |ss: &lqs::model::StateSpace| kalman_decompose(ss, DEFAULT_RANK_TOL).map(|k| k.stages.co).unwrap_or(0);
    g.bench_function(BenchmarkId::new("seq", 200), |b| b.iter(|| map_seq(black_box(&corpus), job)));
    #[cfg(feature = "parallel")]
    g.bench_function(BenchmarkId::new("par", 200), |b| b.iter(|| lqs::par::map_par(black_box(&corpus), job)));
    g.finish();
}

fn sweep(c: &mut Criterion) {
    let net = Network::new(dpa(2.0, 1.0).unwrap().0, DiagonalPlant::unit(), 1.0 / 3.0).unwrap();
    let w = grid(1e-4, 1e2, 20_000, Scale::Log).unwrap();
    let mut g = c.benchmark_group("sweep_20000");
    g.bench_function("seq", |b| b.iter(|| map_seq(black_box(&w), |x| SweepPoint::at(&net, *x))));
    #[cfg(feature = "parallel")]
    g.bench_function("par", |b| b.iter(|| lqs::par::map_par(black_box(&w), |x| SweepPoint::at(&net, *x))));
    g.finish();
}

criterion_group!(benches, zeros, kalman, sweep);
criterion_main!(benches);
