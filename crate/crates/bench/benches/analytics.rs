use criterion::{criterion_group, criterion_main, Criterion};
use fasris_core::experiment::AnalyticModel;
use fasris_core::correlation::{build_correlation_matrix, fit_block_model};
use fasris_core::{MaxGainDistribution, PortGeometry};
use fasris_core::{ScenarioKind, SystemConfig};
use std::hint::black_box;

fn block_fit(c: &mut Criterion) {
    let corr = build_correlation_matrix(&PortGeometry::new(20, 5.0).unwrap());
    c.bench_function("fit_block_model_n20", |b| {
        b.iter(|| fit_block_model(black_box(&corr), 0.1, 1.0).unwrap())
    });
}

fn distribution(c: &mut Criterion) {
    let cfg = SystemConfig::default();
    let model = AnalyticModel::new(&cfg, ScenarioKind::FasRis).unwrap();
    let dist = MaxGainDistribution::new(&model.legit, &model.grid).unwrap();
    let y = model.legit.mean;
    c.bench_function("max_gain_cdf", |b| b.iter(|| dist.cdf(black_box(y))));
    c.bench_function("max_gain_pdf", |b| b.iter(|| dist.pdf(black_box(y))));
}

fn metrics(c: &mut Criterion) {
    let cfg = SystemConfig::default();
    let model = AnalyticModel::new(&cfg, ScenarioKind::FasRis).unwrap();
    let mut group = c.benchmark_group("secrecy");
    group.sample_size(10);
    group.bench_function("asc", |b| b.iter(|| model.asc(black_box(&cfg)).unwrap()));
    group.bench_function("sop", |b| b.iter(|| model.sop(black_box(&cfg)).unwrap()));
    group.finish();
}

criterion_group!(benches, block_fit, distribution, metrics);
criterion_main!(benches);
