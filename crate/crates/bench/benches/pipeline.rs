use criterion::{criterion_group, criterion_main, BatchSize, Criterion};
use std::hint::black_box;

use greenroute::cluster::{dbscan_fit, detect_transit_outliers, elbow_select_k, k_distance_profile, kmeans_fit};
use greenroute::datagen::generate;
use greenroute::regress::default_spec;
use greenroute::{Family, GeneratorSpec};
use greenroute_bench::{emissions, routes, shipments, SEED};

fn corpus(c: &mut Criterion) {
    c.bench_function("generate 5000", |b| b.iter(|| generate(black_box(&GeneratorSpec::new(5000, SEED))).unwrap()));
}

fn regression(c: &mut Criterion) {
    let p = emissions(2000);
    let mut g = c.benchmark_group("fit emissions 2000");
    g.sample_size(10);
    for family in [Family::Ols, Family::ElasticNet, Family::Gbt, Family::RandomForest, Family::Mlp] {
        let spec = default_spec(family, SEED);
        g.bench_function(family.as_str(), |b| b.iter(|| p.fit(black_box(&spec)).unwrap()));
    }
    g.finish();

    let model = p.fit(&default_spec(Family::Gbt, SEED)).unwrap();
    c.bench_function("gbt predict test split", |b| b.iter(|| model.predict(black_box(&p.x_test)).unwrap()));
}

fn clustering(c: &mut Criterion) {
    let x = routes(5000);
    let mut g = c.benchmark_group("cluster 5000");
    g.sample_size(10);
    g.bench_function("kmeans k=3", |b| b.iter(|| kmeans_fit(black_box(&x), 3, SEED).unwrap()));
    g.bench_function("elbow 1..8", |b| b.iter(|| elbow_select_k(black_box(&x), 1, 8, SEED).unwrap()));
    g.bench_function("k-distance k=4", |b| b.iter(|| k_distance_profile(black_box(&x), 4).unwrap()));
    g.bench_function("dbscan", |b| b.iter(|| dbscan_fit(black_box(&x), 0.3, 4).unwrap()));
    g.finish();

    let raw = shipments(1000);
    c.bench_function("transit outliers 1000", |b| {
        b.iter_batched(|| raw.clone(), |d| detect_transit_outliers(&d, None, None).unwrap(), BatchSize::LargeInput)
    });
}

criterion_group!(benches, corpus, regression, clustering);
criterion_main!(benches);
