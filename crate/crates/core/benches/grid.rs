use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use num_complex::Complex64;
use qwres::asymptotics::{discrepancy_sweep, geometric_grid};
use qwres::par::Execution;
use qwres::scattering::{Route, Scattering};
use qwres::spectral::SpectralOptions;
use qwres::models;

const MODES: [(&str, Execution); 2] = [("sequential", Execution::Sequential), ("parallel", Execution::Parallel)];

fn z_grid(c: &mut Criterion) {
    let family = models::cycle(5, &[1.0, 0.8, 0.6, 0.9, 0.7]).unwrap();
    let s = Scattering::new(family.at(0.1).unwrap(), SpectralOptions::default()).unwrap();
    let zs: Vec<Complex64> = (0..512)
        .map(|k| Complex64::from_polar(1.0, 2.0 * std::f64::consts::PI * (k as f64 + 0.5) / 512.0))
        .collect();
    let mut group = c.benchmark_group("sigma_z_grid_512");
    for (name, exec) in MODES {
        group.bench_function(name, |b| {
            b.iter(|| s.sigma_grid(black_box(&zs), Route::Resolvent, exec).unwrap())
        });
    }
    group.finish();
}

fn eps_sweep(c: &mut Criterion) {
    let family = models::matrix_schrodinger();
    let z = Complex64::from_polar(1.0, 0.4);
    let grid = geometric_grid(1e-3, 1e-1, 64);
    let mut group = c.benchmark_group("discrepancy_eps_sweep_64");
    group.sample_size(20);
    for (name, exec) in MODES {
        group.bench_function(name, |b| b.iter(|| discrepancy_sweep(&family, z, black_box(&grid), exec).unwrap()));
    }
    group.finish();
}

criterion_group!(benches, z_grid, eps_sweep);
criterion_main!(benches);
