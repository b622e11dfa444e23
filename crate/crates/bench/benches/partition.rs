use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use tvdist::ising::{estimate_partition, exact_partition};
use tvdist::rng::stream;
use tvdist::IsingModel;

fn partition(c: &mut Criterion) {
    let mut group = c.benchmark_group("partition");
    group.sample_size(10);
    for n in [8, 12, 16] {
        let mut rng = stream(7, "bench-partition");
        let model = IsingModel::random_ferromagnetic(n, 2.0, 0.1, &mut rng).unwrap();
        group.bench_with_input(BenchmarkId::new("ais", n), &n, |b, _| {
            let mut rng = stream(8, "bench-ais-run");
            b.iter(|| black_box(estimate_partition(&model, 0.1, 0.1, &mut rng).unwrap()));
        });
        group.bench_with_input(BenchmarkId::new("exact", n), &n, |b, _| {
            b.iter(|| black_box(exact_partition(&model).unwrap()));
        });
    }
    group.finish();
}

criterion_group!(benches, partition);
criterion_main!(benches);
