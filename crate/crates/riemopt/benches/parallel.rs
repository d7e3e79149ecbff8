use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use riemopt::exec::Execution;
use riemopt::karcher::{
    generate_instance, grid_search, run_experiment, ExperimentConfig, DEFAULT_RBAR,
};
use riemopt::manifolds::{HyperbolicSpace, ManifoldSpec};
use riemopt::suite::{run_suite, DEFAULT_TOLERANCE};

const MODES: [(&str, Execution); 2] = [
    ("sequential", Execution::Sequential),
    ("parallel", Execution::Parallel),
];

fn karcher_rounds(c: &mut Criterion) {
    let mut group = c.benchmark_group("karcher_50_rounds");
    group.sample_size(10);
    for spec in [ManifoldSpec::Hyperbolic(50), ManifoldSpec::Spd(5)] {
        let inst = generate_instance(spec, 10, DEFAULT_RBAR, 7).unwrap();
        for (label, execution) in MODES {
            let cfg = ExperimentConfig {
                iterations: 50,
                gap_cadence: 10,
                execution,
                ..Default::default()
            };
            group.bench_with_input(BenchmarkId::new(label, spec), &cfg, |b, cfg| {
                b.iter(|| black_box(run_experiment(&inst, cfg, None).unwrap().gradient_calls))
            });
        }
    }
    group.finish();
}

fn karcher_grid(c: &mut Criterion) {
    let mut group = c.benchmark_group("karcher_grid");
    group.sample_size(10);
    let inst = generate_instance(ManifoldSpec::Hyperbolic(50), 10, DEFAULT_RBAR, 7).unwrap();
    for (label, execution) in MODES {
        let cfg = ExperimentConfig {
            iterations: 20,
            gap_cadence: 20,
            execution,
            ..Default::default()
        };
        group.bench_function(label, |b| {
            b.iter(|| black_box(grid_search(&inst, &cfg, &[0.1, 0.01, 0.001], &[0.1, 0.01]).len()))
        });
    }
    group.finish();
}

fn geometry_suite(c: &mut Criterion) {
    let mut group = c.benchmark_group("geometry_suite_h10");
    let m = HyperbolicSpace::new(10);
    for (label, execution) in MODES {
        group.bench_function(label, |b| {
            b.iter(|| {
                black_box(
                    run_suite(&m, 1000, 2024, DEFAULT_TOLERANCE, execution)
                        .unwrap()
                        .ok(),
                )
            })
        });
    }
    group.finish();
}

criterion_group!(benches, karcher_rounds, karcher_grid, geometry_suite);
criterion_main!(benches);
