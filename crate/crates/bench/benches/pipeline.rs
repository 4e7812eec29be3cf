use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use hydrofeat::clustering::{dissimilarity_from_proximity, pam};
use hydrofeat::{compute_features, make_contrast, proximity, train_forest, FEATURE_COUNT};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn noisy_annual(n: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|d| (2.0 * std::f64::consts::PI * d as f64 / 365.25).sin() + rng.gen_range(-1.0..1.0))
        .collect()
}

fn feature_rows(n: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|i| {
            let shift = if i % 2 == 0 { 0.0 } else { 3.0 };
            (0..FEATURE_COUNT).map(|_| shift + rng.gen_range(-1.0..1.0)).collect()
        })
        .collect()
}

fn features(c: &mut Criterion) {
    let daily = noisy_annual(2922, 1);
    c.bench_function("features/daily_8y_f365", |b| b.iter(|| compute_features(black_box(&daily), 365).unwrap()));
    let monthly: Vec<f64> = daily.chunks(30).map(|w| w.iter().sum::<f64>() / 30.0).collect();
    c.bench_function("features/monthly_f12", |b| b.iter(|| compute_features(black_box(&monthly), 12).unwrap()));
}

fn forest(c: &mut Criterion) {
    let rows = feature_rows(40, 2);
    let data = make_contrast(&rows, 2).unwrap();
    let mut group = c.benchmark_group("forest");
    group.sample_size(10);
    group.bench_function("train_500_trees_40_rows", |b| b.iter(|| train_forest(black_box(&data), 500, 2, 2).unwrap()));
    let trained = train_forest(&data, 500, 2, 2).unwrap();
    group.bench_function("proximity_500_trees_40_rows", |b| b.iter(|| proximity(black_box(&trained), &rows).unwrap()));
    group.finish();
}

fn clustering(c: &mut Criterion) {
    let rows = feature_rows(200, 3);
    let data = make_contrast(&rows, 3).unwrap();
    let trained = train_forest(&data, 200, 2, 3).unwrap();
    let d = dissimilarity_from_proximity(&proximity(&trained, &rows).unwrap()).unwrap();
    c.bench_function("pam/200_objects_k4", |b| b.iter(|| pam(black_box(&d), 4, 0).unwrap()));
}

criterion_group!(benches, features, forest, clustering);
criterion_main!(benches);
