use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use lig_bench::{hashed_dataset, ring_game};
use lig_core::convex::{train, train_simultaneous_hinge};
use lig_core::exact::{enumerate_ltfs, sample_picking};
use lig_core::{enumerate_equilibria, ConvexMethod, ConvexTrainConfig, DEFAULT_TOL};

fn equilibria(c: &mut Criterion) {
    let mut group = c.benchmark_group("enumerate_equilibria");
    for n in [8, 12, 16] {
        let g = ring_game(n);
        group.bench_with_input(BenchmarkId::from_parameter(n), &g, |b, g| {
            b.iter(|| enumerate_equilibria(g, DEFAULT_TOL).unwrap())
        });
    }
    group.finish();
}

fn exact(c: &mut Criterion) {
    c.bench_function("enumerate_ltfs/3", |b| {
        b.iter(|| enumerate_ltfs(3).unwrap())
    });
    let data = hashed_dataset(20, 500, 1);
    c.bench_function("sample_picking/n20_m500", |b| {
        b.iter(|| sample_picking(&data).unwrap())
    });
}

fn convex(c: &mut Criterion) {
    let mut group = c.benchmark_group("convex");
    group.sample_size(10);
    let data = hashed_dataset(10, 100, 2);
    for method in [ConvexMethod::IndLogistic, ConvexMethod::SimLogistic] {
        let cfg = ConvexTrainConfig::new(method, 0.01);
        group.bench_function(method.name(), |b| b.iter(|| train(&data, &cfg).unwrap()));
    }
    let small = hashed_dataset(6, 40, 3);
    let cfg = ConvexTrainConfig::new(ConvexMethod::SimSvm, 0.01);
    group.bench_function("sim_svm/n6_m40", |b| {
        b.iter(|| train_simultaneous_hinge(&small, &cfg).unwrap())
    });
    group.finish();
}

criterion_group!(benches, equilibria, exact, convex);
criterion_main!(benches);
