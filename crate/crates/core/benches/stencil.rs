use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use std::hint::black_box;

use ambidiff::ambipolar::{cfl_max_dt, step_with_source};
use ambidiff::grid::{discrete_laplacian_with, upwind_gradient_with};
use ambidiff::nondim::{Axis, BoundarySpec, DimensionlessConfig, InitialSpec};
use ambidiff::{Exec, Grid2D, ScalarField};

const SIZES: [usize; 3] = [64, 128, 256];
const POLICIES: [(&str, Exec); 2] = [("sequential", Exec::Sequential), ("parallel", Exec::Parallel)];

fn wavy(n: usize) -> ScalarField {
    let g = Grid2D::square(n, 10.0).unwrap();
    ScalarField::from_fn(g, |x, y| 0.5 + 0.4 * (0.7 * x).sin() * (1.3 * y).cos())
}

fn bench_laplacian(c: &mut Criterion) {
    let mut group = c.benchmark_group("laplacian");
    for n in SIZES {
        let f = wavy(n);
        for (name, exec) in POLICIES {
            group.bench_with_input(BenchmarkId::new(name, n), &f, |b, f| {
                b.iter(|| discrete_laplacian_with(black_box(f), exec))
            });
        }
    }
    group.finish();
}

fn bench_upwind(c: &mut Criterion) {
    let mut group = c.benchmark_group("upwind");
    for n in SIZES {
        let f = wavy(n);
        for (name, exec) in POLICIES {
            group.bench_with_input(BenchmarkId::new(name, n), &f, |b, f| {
                b.iter(|| upwind_gradient_with(black_box(f), 3.0, -1.0, exec))
            });
        }
    }
    group.finish();
}

fn bench_step(c: &mut Criterion) {
    let mut group = c.benchmark_group("ambipolar_step");
    for n in SIZES {
        let g = Grid2D::square(n, 10.0).unwrap();
        let cfg = DimensionlessConfig::new(
            1.0,
            (3.0, 3.0),
            10.0,
            (n, n),
            BoundarySpec::linear_ramp(&g, Axis::Xi1, 1.0, 0.0),
            InitialSpec::Constant(0.5),
        )
        .unwrap();
        let u = cfg.initial_field().unwrap();
        let dt = 0.9 * cfl_max_dt(&cfg);
        for (name, exec) in POLICIES {
            group.bench_with_input(BenchmarkId::new(name, n), &u, |b, u| {
                b.iter(|| step_with_source(black_box(u), &cfg, dt, None, exec).unwrap())
            });
        }
    }
    group.finish();
}

criterion_group!(benches, bench_laplacian, bench_upwind, bench_step);
criterion_main!(benches);
