use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use lmea::{branch_bound, held_karp, insertion, nearest_neighbor, Variant};
use lmea_bench::{clu, rue};
use std::hint::black_box;

fn exact(c: &mut Criterion) {
    let mut group = c.benchmark_group("exact");
    group.sample_size(10);
    for n in [10, 13, 16] {
        let inst = rue(n);
        group.bench_with_input(BenchmarkId::new("held_karp", n), &inst, |b, i| {
            b.iter(|| held_karp(black_box(i)).unwrap())
        });
    }
    for n in [12, 15] {
        let inst = clu(n);
        group.bench_with_input(BenchmarkId::new("branch_bound", n), &inst, |b, i| {
            b.iter(|| branch_bound(black_box(i), None).unwrap())
        });
    }
    group.finish();
}

fn heuristics(c: &mut Criterion) {
    let inst = rue(25);
    let mut group = c.benchmark_group("heuristics");
    group.bench_function("nearest_neighbor", |b| {
        b.iter(|| nearest_neighbor(black_box(&inst), 0).unwrap())
    });
    for v in [
        Variant::FarthestInsertion,
        Variant::NearestInsertion,
        Variant::RandomInsertion,
    ] {
        group.bench_function(v.label(), |b| b.iter(|| insertion(black_box(&inst), v, 7)));
    }
    group.finish();
}

criterion_group!(benches, exact, heuristics);
criterion_main!(benches);
