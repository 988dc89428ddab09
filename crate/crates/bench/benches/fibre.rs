use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use polaron_bench::ring_model;
use polaron_core::spectral::krylov_lowest;
use polaron_core::{assemble, dense_spectrum, FibreOperators, C64};

fn assembly(c: &mut Criterion) {
    let mut group = c.benchmark_group("assemble");
    for n_max in [1, 2, 3] {
        let model = ring_model(4, n_max);
        group.bench_with_input(BenchmarkId::from_parameter(n_max), &model, |b, m| b.iter(|| assemble(black_box(m))));
    }
    group.finish();
}

fn matvec(c: &mut Criterion) {
    let model = ring_model(4, 3);
    let h = FibreOperators::new(&model).unwrap().hamiltonian(&model.params);
    let x: Vec<C64> = (0..h.dim()).map(|i| C64::new((i as f64).sin(), (i as f64).cos())).collect();
    c.bench_function(&format!("matvec dim {}", h.dim()), |b| b.iter(|| h.matvec(black_box(&x))));
}

fn eigensolvers(c: &mut Criterion) {
    let model = ring_model(4, 3);
    let h = FibreOperators::new(&model).unwrap().hamiltonian(&model.params);
    let mut group = c.benchmark_group(format!("lowest eigenvalue dim {}", h.dim()));
    group.sample_size(10);
    group.bench_function("krylov", |b| b.iter(|| krylov_lowest(black_box(&h), 1, 1e-10, 20_000, 7).unwrap()));
    group.bench_function("dense", |b| b.iter(|| dense_spectrum(black_box(&h), 3000).unwrap()));
    group.finish();
}

criterion_group!(benches, assembly, matvec, eigensolvers);
criterion_main!(benches);
