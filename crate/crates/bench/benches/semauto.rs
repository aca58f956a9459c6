use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use semauto_core::evalmetrics::{wilcoxon_exact, wilcoxon_normal};
use semauto_core::explain::{pairwise, pointwise};
use semauto_core::{TrainConfig, UserAutoencoder};

fn forward_backward(c: &mut Criterion) {
    let mut group = c.benchmark_group("autoencoder");
    for (items, features) in [(100, 200), (1000, 2000)] {
        let mask = semauto_bench::mask(1, items, features, 0.01);
        let x = semauto_bench::ratings(2, items);
        let ae = UserAutoencoder::init(mask, TrainConfig::default()).unwrap();
        let id = format!("{items}x{features}");
        group.bench_with_input(BenchmarkId::new("forward", &id), &x, |b, x| b.iter(|| ae.forward(black_box(x))));
        group.bench_with_input(BenchmarkId::new("backward", &id), &x, |b, x| b.iter(|| ae.backward(black_box(x))));
    }
    group.finish();
}

fn train(c: &mut Criterion) {
    let mask = semauto_bench::mask(3, 200, 400, 0.02);
    let x = semauto_bench::ratings(4, 200);
    let cfg = TrainConfig { epochs: 100, ..TrainConfig::default() };
    let init = UserAutoencoder::init(mask, cfg).unwrap();
    c.bench_function("train 200x400 100 epochs", |b| {
        b.iter(|| {
            let mut ae = init.clone();
            ae.train(black_box(&x)).unwrap()
        })
    });
}

fn explanations(c: &mut Criterion) {
    let (_, profile) = semauto_bench::profile(5, 5000);
    let f_i: Vec<usize> = (0..5000).step_by(37).collect();
    let f_j: Vec<usize> = (0..5000).step_by(41).collect();
    c.bench_function("pointwise k=5", |b| b.iter(|| pointwise(&profile, black_box(&f_i), 5)));
    c.bench_function("pairwise k=5", |b| b.iter(|| pairwise(&profile, black_box(&f_i), 0.9, &f_j, 0.8, 5)));
}

fn rank_sum(c: &mut Criterion) {
    let (a, b) = (semauto_bench::sample(6, 6), semauto_bench::sample(7, 6));
    c.bench_function("wilcoxon exact 6+6", |bch| bch.iter(|| wilcoxon_exact(black_box(&a), &b)));
    let (a, b) = (semauto_bench::sample(8, 73), semauto_bench::sample(9, 73));
    c.bench_function("wilcoxon normal 73+73", |bch| bch.iter(|| wilcoxon_normal(black_box(&a), &b)));
}

criterion_group!(benches, forward_backward, train, explanations, rank_sum);
criterion_main!(benches);
