use std::path::PathBuf;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use observatory_core::engine::{assess, entropy_scatter, EngineContext, DEFAULT_MIN_ARTICLES};
use observatory_core::ingestion::fixture::load_fixture_dir;
use observatory_core::{synth, Registry, Window};

fn assess_cohort(c: &mut Criterion) {
    let window: Window = "2021-01..2021-07".parse().unwrap();
    let registry = Registry::default_registry();
    let ctx = EngineContext::default();
    let mut g = c.benchmark_group("assess");
    g.sample_size(20);
    for n in [25, 100, 300] {
        let cohort = synth::cohort(7, n, window);
        g.bench_with_input(BenchmarkId::from_parameter(n), &cohort, |b, s| b.iter(|| assess(s, &registry, &ctx).unwrap()));
    }
    g.finish();
}

fn scatter(c: &mut Criterion) {
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures/snapshots");
    let snaps = load_fixture_dir(&dir).unwrap();
    let window: Window = "2021-04".parse().unwrap();
    c.bench_function("entropy_scatter/fixtures", |b| b.iter(|| entropy_scatter(&snaps, window, DEFAULT_MIN_ARTICLES).unwrap()));
}

criterion_group!(benches, assess_cohort, scatter);
criterion_main!(benches);
