//! Boundary quadrature on one worker against the full pool.
//!
//! Build with `--no-default-features` to time the compiled-out sequential path.

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use renormgb::invariants::{gauss_bonnet_report, ReportConfig};
use renormgb::quadrature::{deterministic_sum, with_workers};
use renormgb::verify::{ball, ellipsoid};
use renormgb::Complex64;

fn pool_sizes() -> Vec<usize> {
    let cores = std::thread::available_parallelism().map_or(1, |n| n.get());
    if cores > 1 {
        vec![1, cores]
    } else {
        vec![1]
    }
}

fn boundary_reports(c: &mut Criterion) {
    let mut group = c.benchmark_group("boundary_report");
    group.sample_size(10);
    let config = ReportConfig {
        resolution: 16,
        euler_side: false,
        ..ReportConfig::default()
    };
    let cases = [
        ("ball_n1", ball(1).unwrap()),
        ("ellipsoid_n1", ellipsoid(1, 0.2).unwrap()),
    ];
    for (name, spec) in &cases {
        for workers in pool_sizes() {
            group.bench_with_input(BenchmarkId::new(*name, workers), &workers, |b, &w| {
                b.iter(|| with_workers(w, || gauss_bonnet_report(spec, &config).unwrap()).unwrap())
            });
        }
    }
    group.finish();
}

fn reduction(c: &mut Criterion) {
    let values: Vec<Complex64> = (0..1 << 18)
        .map(|k| Complex64::new((k as f64).sin(), 1.0 / (1.0 + k as f64)))
        .collect();
    let mut group = c.benchmark_group("deterministic_sum");
    for workers in pool_sizes() {
        group.bench_with_input(BenchmarkId::from_parameter(workers), &workers, |b, &w| {
            b.iter(|| with_workers(w, || deterministic_sum(&values)).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, boundary_reports, reduction);
criterion_main!(benches);
