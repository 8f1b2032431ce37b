use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use psolab::harness::{run_experiment, ExperimentConfig, Workers};

fn config(name: &str, trials: u64) -> ExperimentConfig {
    let path = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs").join(name);
    let mut cfg = ExperimentConfig::from_json(&std::fs::read_to_string(path).unwrap()).unwrap();
    cfg.trials = trials;
    cfg
}

fn sequential_vs_parallel(c: &mut Criterion) {
    let mut group = c.benchmark_group("trials");
    group.sample_size(10);
    for (name, trials) in [("counting.json", 2000), ("kanon-suppress.json", 200), ("trivial-hash.json", 5000)] {
        let exp = config(name, trials).resolve().unwrap();
        group.bench_with_input(BenchmarkId::new("sequential", name), &exp, |b, exp| {
            b.iter(|| black_box(run_experiment(exp, Workers(1)).unwrap()))
        });
        group.bench_with_input(BenchmarkId::new("parallel", name), &exp, |b, exp| {
            b.iter(|| black_box(run_experiment(exp, Workers(0)).unwrap()))
        });
    }
    group.finish();
}

criterion_group!(benches, sequential_vs_parallel);
criterion_main!(benches);
