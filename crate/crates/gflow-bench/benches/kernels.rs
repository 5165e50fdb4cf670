//! Throughput of the hot numerical kernels at desk-scale resolutions.

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use std::hint::black_box;

use gflow_core::field::{integrate, laplacian, partial, Axis, RealField};
use gflow_core::flows::{rhs_gauged, step_rk4, FlowSpec, System};
use gflow_core::gauge::Mu;
use gflow_core::grid::{Boundary, Grid2D, StencilOrder};
use gflow_core::maps::{self, FrameScheme};
use gflow_core::poisson::solve_poisson;
use gflow_core::solitons::self_dual_data;

fn grid(n: usize) -> Grid2D {
    Grid2D::new(8.0, n, Boundary::DirichletZero).unwrap()
}

fn stencils(c: &mut Criterion) {
    let mut group = c.benchmark_group("stencils");
    for n in [128usize, 256] {
        let g = grid(n);
        let f = RealField::from_fn(g, |x, y| (-(x * x + y * y) / 3.0).exp() * (x * 0.7).sin());
        group.bench_with_input(BenchmarkId::new("partial_x1_order2", n), &f, |b, f| {
            b.iter(|| partial(black_box(f), Axis::X1, StencilOrder::Two))
        });
        group.bench_with_input(BenchmarkId::new("laplacian_order4", n), &f, |b, f| {
            b.iter(|| laplacian(black_box(f), StencilOrder::Four))
        });
        group.bench_with_input(BenchmarkId::new("integrate", n), &f, |b, f| {
            b.iter(|| integrate(black_box(f)))
        });
    }
    group.finish();
}

fn flows(c: &mut Criterion) {
    let mut group = c.benchmark_group("flows");
    group.sample_size(20);
    for n in [128usize, 256] {
        let s = self_dual_data(grid(n), 1, Mu::Sphere).unwrap();
        group.bench_with_input(BenchmarkId::new("rhs_sm", n), &s, |b, s| {
            b.iter(|| rhs_gauged(black_box(s), System::Sm, StencilOrder::Two).unwrap())
        });
        let spec = FlowSpec::new(System::Sm, 1e-5, 0.0);
        group.bench_with_input(BenchmarkId::new("step_rk4_sm", n), &s, |b, s| {
            b.iter(|| step_rk4(black_box(s), &spec).unwrap())
        });
    }
    group.finish();
}

fn elliptic_and_frames(c: &mut Criterion) {
    let mut group = c.benchmark_group("elliptic_and_frames");
    group.sample_size(10);
    let g = grid(128);
    let f = RealField::from_fn(g, |x, y| {
        let r2 = x * x + y * y;
        (4.0 * r2 - 4.0) * (-r2).exp()
    });
    group.bench_function("poisson_dirichlet_128", |b| {
        b.iter(|| solve_poisson(black_box(&f)).unwrap())
    });
    let s = self_dual_data(g, 1, Mu::Sphere).unwrap();
    group.bench_function("reconstruct_cf4_128", |b| {
        b.iter(|| {
            maps::reconstruct_frame(
                black_box(&s),
                gflow_core::mat3::Mat3::identity(),
                FrameScheme::CommutatorFree4,
            )
            .unwrap()
        })
    });
    group.finish();
}

criterion_group!(benches, stencils, flows, elliptic_and_frames);
criterion_main!(benches);
