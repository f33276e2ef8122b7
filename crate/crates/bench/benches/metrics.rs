use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use observatory_core::metrics::{linear_fit, normalize, percentile_rank, shannon_entropy};
use std::hint::black_box;

fn masses(n: usize) -> Vec<f64> {
    // deterministic and skewed, like country traffic
    (0..n).map(|k| 1e6 * (-(k as f64) / 12.0).exp() + 1.0).collect()
}

fn entropy(c: &mut Criterion) {
    let mut g = c.benchmark_group("entropy");
    for n in [10, 100, 250] {
        let m = masses(n);
        g.bench_with_input(BenchmarkId::from_parameter(n), &m, |b, m| {
            b.iter(|| shannon_entropy(&normalize(m.iter().copied().enumerate()).unwrap()).nats)
        });
    }
    g.finish();
}

fn percentile(c: &mut Criterion) {
    let cohort: Vec<f64> = (0..300).map(|k| ((k * 37) % 300) as f64).collect();
    c.bench_function("percentile_rank/300", |b| b.iter(|| percentile_rank(black_box(150.5), &cohort).unwrap()));
}

fn fit(c: &mut Criterion) {
    let pts: Vec<(f64, f64)> = (0..300).map(|k| (k as f64 / 60.0, 0.65 * k as f64 / 60.0 + ((k * 7) % 5) as f64 * 0.1)).collect();
    c.bench_function("linear_fit/300", |b| b.iter(|| linear_fit(black_box(&pts)).unwrap()));
}

criterion_group!(benches, entropy, percentile, fit);
criterion_main!(benches);
