//! Sequential vs rayon execution of the Monte Carlo variance and the
//! per-cell R² surface. On a single-core machine the two should match;
//! the gap grows with the core count.

use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use hawkes_vol::econometrics::futures_r2_surface;
use hawkes_vol::par::Execution;
use hawkes_vol::simulate::{mc_variance_with, MarkModel};
use hawkes_vol::{HawkesParams, Mat2, MarkedHawkesParams, Vec2};

const POLICIES: [(&str, Execution); 2] = [("sequential", Execution::Sequential), ("parallel", Execution::Parallel)];

fn params() -> MarkedHawkesParams {
    HawkesParams::new(Vec2([0.2, 0.2]), Mat2::new(0.3, 0.15, 0.1, 0.35), Vec2([0.9, 1.1]))
        .marked(Mat2::new(0.05, 0.03, 0.02, 0.06))
}

fn monte_carlo(c: &mut Criterion) {
    let p = params();
    let marks = MarkModel::Geometric { mean: 1.5 };
    let mut g = c.benchmark_group("mc_variance_256_paths_t2000");
    g.sample_size(10);
    for (name, exec) in POLICIES {
        g.bench_with_input(BenchmarkId::from_parameter(name), &exec, |b, &exec| {
            b.iter(|| mc_variance_with(black_box(&p), &marks, 2000.0, 256, 7, exec).unwrap())
        });
    }
    g.finish();
}

fn r2_surface(c: &mut Criterion) {
    let days = 1000;
    let series = |phase: f64| -> Vec<Option<f64>> {
        (0..days).map(|d| Some(1.0 + 0.3 * ((d as f64) * 0.37 + phase).sin())).collect()
    };
    let stock: Vec<_> = (0..12).map(|k| (1800.0 * (k + 1) as f64, series(k as f64 * 0.1))).collect();
    let futures: Vec<_> = (0..12).map(|k| (1800.0 * (k + 1) as f64, series(0.05 + k as f64 * 0.13))).collect();
    let mut g = c.benchmark_group("r2_surface_12x12_1000d");
    for (name, exec) in POLICIES {
        g.bench_with_input(BenchmarkId::from_parameter(name), &exec, |b, &exec| {
            b.iter(|| futures_r2_surface(black_box(&stock), black_box(&futures), exec).unwrap())
        });
    }
    g.finish();
}

criterion_group!(benches, monte_carlo, r2_surface);
criterion_main!(benches);
