use std::hint::black_box;

use clickstat_core::{
    conditional_tables, inclusion_exclusion_tables, ring_resonator, run_experiment, DetectorConfig,
    Source,
};
use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion, Throughput};

fn exact_tables(c: &mut Criterion) {
    let mut group = c.benchmark_group("conditional_tables");
    for n_modes in [4, 10, 20] {
        let mux = ring_resonator(0.6, n_modes).unwrap();
        let det = DetectorConfig::uniform(n_modes, 0.8, 0.01).unwrap();
        group.bench_with_input(BenchmarkId::new("recursion", n_modes), &n_modes, |b, _| {
            b.iter(|| conditional_tables(black_box(&mux), black_box(&det), 60).unwrap())
        });
        if n_modes <= 10 {
            group.bench_with_input(
                BenchmarkId::new("inclusion_exclusion", n_modes),
                &n_modes,
                |b, _| {
                    b.iter(|| {
                        inclusion_exclusion_tables(black_box(&mux), black_box(&det), 60).unwrap()
                    })
                },
            );
        }
    }
    group.finish();
}

fn mixture(c: &mut Criterion) {
    let mux = ring_resonator(0.6, 10).unwrap();
    let det = DetectorConfig::uniform(10, 1.0, 0.0).unwrap();
    let pnd = Source::Thermal { mean: 3.0 }
        .distribution_auto(30, 1e-14)
        .unwrap();
    let tables = conditional_tables(&mux, &det, pnd.n_max()).unwrap();
    c.bench_function("mix_thermal_n10", |b| {
        b.iter(|| tables.mix(black_box(&pnd)).unwrap())
    });
}

fn simulation(c: &mut Criterion) {
    let mut group = c.benchmark_group("run_experiment");
    let trials = 100_000;
    group.throughput(Throughput::Elements(trials));
    group.sample_size(10);
    for (name, source) in [
        ("coherent2", Source::Coherent { mean: 2.0 }),
        ("thermal5", Source::Thermal { mean: 5.0 }),
    ] {
        let pnd = source.distribution_auto(30, 1e-14).unwrap();
        let mux = ring_resonator(0.6, 10).unwrap();
        let det = DetectorConfig::uniform(10, 1.0, 0.0).unwrap();
        group.bench_function(name, |b| {
            b.iter(|| run_experiment(&pnd, &mux, &det, trials, 1).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, exact_tables, mixture, simulation);
criterion_main!(benches);
