//! Parallel vs sequential throughput on the data-parallel inner loops:
//! shell scans of V₂, partition estimation, and sparse matvec.

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use carnot_core::certify::divergence_scan;
use carnot_core::dynamics::{assemble_hamiltonian, SpectrumConfig};
use carnot_core::exec;
use carnot_core::norms::NormSpec;
use carnot_core::taming::{partition_estimate, EnergyModel, OuterFunction, TamingSpec};
use carnot_core::Step2Group;

fn tamed_model() -> EnergyModel {
    EnergyModel::new(
        Step2Group::heisenberg(),
        NormSpec::type2(16.0),
        TamingSpec::AdditivePower { sigma: 1.0, beta: 1.0 },
        OuterFunction::power(8.0),
    )
    .unwrap()
}

fn with_threads<T>(threads: usize, f: impl FnOnce() -> T) -> T {
    exec::set_threads(threads);
    let out = f();
    exec::set_threads(0);
    out
}

fn bench_scan(c: &mut Criterion) {
    let model = tamed_model();
    let radii = [1.0, 2.0, 4.0, 8.0, 16.0, 32.0];
    let mut group = c.benchmark_group("divergence_scan");
    group.sample_size(10);
    for &(label, threads) in &[("seq", 1usize), ("par", 0usize)] {
        group.bench_with_input(BenchmarkId::new(label, 2048), &threads, |b, &t| {
            b.iter(|| with_threads(t, || divergence_scan(&model, &radii, 2048, 7).unwrap()))
        });
    }
    group.finish();
}

fn bench_partition(c: &mut Criterion) {
    let model = tamed_model();
    let mut group = c.benchmark_group("partition_estimate");
    group.sample_size(10);
    for &(label, threads) in &[("seq", 1usize), ("par", 0usize)] {
        group.bench_with_input(BenchmarkId::new(label, 100_000), &threads, |b, &t| {
            b.iter(|| with_threads(t, || partition_estimate(&model, 100_000, 11).unwrap()))
        });
    }
    group.finish();
}

fn bench_matvec(c: &mut Criterion) {
    let model = EnergyModel::new(
        Step2Group::heisenberg(),
        NormSpec::type2(16.0),
        TamingSpec::AdditivePower { sigma: 1.0, beta: 1.0 },
        OuterFunction::power(2.0),
    )
    .unwrap();
    let cfg = SpectrumConfig {
        grid: vec![24, 24, 24],
        half_widths: vec![2.0, 2.0, 1.0],
        k: 4,
        tol: 1e-6,
        v_clamp: 1e6,
        max_matvecs: 10_000,
    };
    let (h, _) = assemble_hamiltonian(&model, &cfg).unwrap();
    let x = vec![1.0; h.dim()];
    let mut y = vec![0.0; h.dim()];
    let mut group = c.benchmark_group("matvec_24cubed");
    for &(label, threads) in &[("seq", 1usize), ("par", 0usize)] {
        group.bench_with_input(BenchmarkId::new(label, h.dim()), &threads, |b, &t| {
            b.iter(|| with_threads(t, || h.matvec(&x, &mut y)))
        });
    }
    group.finish();
}

criterion_group!(benches, bench_scan, bench_partition, bench_matvec);
criterion_main!(benches);
