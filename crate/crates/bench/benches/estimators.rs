use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use recical_bench::sounding;
use recical_core::geometry::{build_geometry, CouplingModel, MeasurementMask};
use recical_core::wideband::wideband_fit;
use recical_core::{
    crlb_coefficients, deterministic_frontend, em_calibrate, from_db, gmm_estimate, Complex64, Constraint,
    CrlbInputs, EmInit, EmSettings,
};
use std::hint::black_box;

fn em_iteration(c: &mut Criterion) {
    let mut g = c.benchmark_group("em_one_iteration");
    for cols in [25, 50] {
        let data = sounding(4, cols, -40.0, 1);
        let init = vec![Complex64::new(1.0, 0.0); data.len()];
        let s = EmSettings::new(0.0, 0)
            .with_init(EmInit::Explicit(init))
            .with_max_iter(1);
        g.bench_with_input(BenchmarkId::from_parameter(data.len()), &data, |b, d| {
            b.iter(|| em_calibrate(black_box(d), &s).unwrap())
        });
    }
    g.finish();
}

fn gmm(c: &mut Criterion) {
    let mut g = c.benchmark_group("gmm");
    for cols in [25, 50] {
        let data = sounding(4, cols, -40.0, 2);
        let m = data.len();
        g.bench_with_input(BenchmarkId::new("ref_one", m), &data, |b, d| {
            b.iter(|| gmm_estimate(black_box(d), Constraint::RefOne { reference: 0 }).unwrap())
        });
        g.bench_with_input(BenchmarkId::new("unit_norm", m), &data, |b, d| {
            b.iter(|| gmm_estimate(black_box(d), Constraint::UnitNorm { reference: 0 }).unwrap())
        });
    }
    g.finish();
}

fn crlb(c: &mut Criterion) {
    let mut g = c.benchmark_group("crlb");
    g.sample_size(10);
    for cols in [10, 25] {
        let geom = build_geometry(4, cols, 0.5).unwrap();
        let fe = deterministic_frontend(geom.len(), 0).unwrap();
        let inputs = CrlbInputs::from_model(
            &geom,
            &CouplingModel::default(),
            fe,
            from_db(-60.0),
            MeasurementMask::full(geom.len()),
        )
        .unwrap();
        g.bench_with_input(BenchmarkId::from_parameter(geom.len()), &inputs, |b, i| {
            b.iter(|| crlb_coefficients(black_box(i)).unwrap())
        });
    }
    g.finish();
}

fn kernel_fit(c: &mut Criterion) {
    let row: Vec<Complex64> = (0..1200)
        .map(|k| {
            let k = k as f64;
            Complex64::new(2e-5 * k, 1e-4 * std::f64::consts::TAU * k).exp()
                + Complex64::new(1e-3 * (k * 0.7).sin(), 1e-3 * (k * 1.3).cos())
        })
        .collect();
    c.bench_function("wideband_fit_1200", |b| {
        b.iter(|| wideband_fit(black_box(&row)).unwrap())
    });
}

criterion_group!(benches, em_iteration, gmm, crlb, kernel_fit);
criterion_main!(benches);
