use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use pcsm_core::{
    saliency_drop, saliency_scores, Architecture, DropConfig, ModelParams, PointCloud,
    SaliencyConfig, Scheme,
};
use std::hint::black_box;

fn sphere(n: usize) -> PointCloud {
    let golden = std::f64::consts::PI * (3.0 - 5f64.sqrt());
    PointCloud::new(
        (0..n)
            .map(|i| {
                let y = 1.0 - 2.0 * (i as f64 + 0.5) / n as f64;
                let r = (1.0 - y * y).sqrt();
                let t = golden * i as f64;
                [r * t.cos(), y, r * t.sin()]
            })
            .collect(),
    )
}

fn forward_and_saliency(c: &mut Criterion) {
    let model = ModelParams::init(&Architecture::default(), 8, 0).unwrap();
    let config = SaliencyConfig::default();
    let mut group = c.benchmark_group("per_cloud");
    for n in [256, 1024] {
        let cloud = sphere(n);
        group.bench_with_input(BenchmarkId::new("forward", n), &cloud, |b, cloud| {
            b.iter(|| model.forward(black_box(cloud)).unwrap())
        });
        group.bench_with_input(BenchmarkId::new("saliency", n), &cloud, |b, cloud| {
            b.iter(|| saliency_scores(&model, black_box(cloud), Some(0), &config).unwrap())
        });
    }
    group.finish();
}

fn iterative_drop(c: &mut Criterion) {
    let model = ModelParams::init(&Architecture::default(), 8, 0).unwrap();
    let cloud = sphere(256);
    let mut group = c.benchmark_group("high_drop_n50");
    for t in [1, 10] {
        let config = DropConfig::new(Scheme::High, 50, t);
        group.bench_with_input(
            BenchmarkId::from_parameter(format!("T={t}")),
            &config,
            |b, config| b.iter(|| saliency_drop(&model, black_box(&cloud), 0, config).unwrap()),
        );
    }
    group.finish();
}

criterion_group!(benches, forward_and_saliency, iterative_drop);
criterion_main!(benches);
