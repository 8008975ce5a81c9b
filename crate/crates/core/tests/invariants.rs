//! Cross-module invariants: estimator equivariance, noiseless recovery and
//! monotonicity of the bound in the measurement set and noise level.

use proptest::prelude::*;
use recical_core::random::stream;
use recical_core::{
    build_geometry, crlb_coefficients, draw_channel, em_calibrate, gmm_estimate, random_frontend,
    reduced_mask, sound, Complex64, Constraint, CouplingModel, CrlbInputs, EmSettings, MeasurementMask,
    SoundingData,
};

fn instance(
    rows: usize,
    cols: usize,
    reference: usize,
    n0: f64,
    seed: u64,
) -> (SoundingData, Vec<Complex64>) {
    let geom = build_geometry(rows, cols, 0.5).unwrap();
    let count = geom.len();
    let mut rng = stream(seed, 0, 0);
    let h = draw_channel(&geom, &CouplingModel::default(), &mut rng).unwrap();
    let fe = random_frontend(count, reference, 0.4, &mut rng).unwrap();
    let data = sound(&h, &fe, n0, 1.0, &MeasurementMask::full(count), &mut rng).unwrap();
    let c = fe.coefficients();
    let cref = c[reference];
    (data, c.iter().map(|x| x / cref).collect())
}

fn max_dev(a: &[Complex64], b: &[Complex64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn noiseless_soundings_are_recovered_exactly(
        rows in 1usize..4,
        cols in 2usize..6,
        seed in 0u64..1_000,
    ) {
        let reference = (rows * cols) / 2;
        let (data, truth) = instance(rows, cols, reference, 0.0, seed);
        let gmm = gmm_estimate(&data, Constraint::RefOne { reference }).unwrap();
        prop_assert!(max_dev(&gmm.normalized(reference).unwrap(), &truth) < 1e-9);
        let unit = gmm_estimate(&data, Constraint::UnitNorm { reference }).unwrap();
        prop_assert!(max_dev(&unit.normalized(reference).unwrap(), &truth) < 1e-9);
        let em = em_calibrate(&data, &EmSettings::new(0.0, reference)).unwrap();
        prop_assert!(max_dev(&em.normalized(reference).unwrap(), &truth) < 1e-9);
    }

    #[test]
    fn estimates_ignore_a_common_measurement_scale(
        seed in 0u64..1_000,
        re in -2.0f64..2.0,
        im in -2.0f64..2.0,
    ) {
        prop_assume!(re.hypot(im) > 0.05);
        let alpha = Complex64::new(re, im);
        let (data, _) = instance(2, 4, 2, 1e-5, seed);
        let scaled = data.scaled(alpha);
        let a = gmm_estimate(&data, Constraint::RefOne { reference: 2 }).unwrap().c_hat;
        let b = gmm_estimate(&scaled, Constraint::RefOne { reference: 2 }).unwrap().c_hat;
        prop_assert!(max_dev(&a, &b) < 1e-9);
        let s = EmSettings::new(0.0, 2).with_delta(1e-20);
        let a = em_calibrate(&data, &s).unwrap().normalized(2).unwrap();
        let b = em_calibrate(&scaled, &s).unwrap().normalized(2).unwrap();
        prop_assert!(max_dev(&a, &b) < 1e-7);
    }

    #[test]
    fn fewer_measurements_never_tighten_the_bound(seed in 0u64..1_000, n0_db in -80.0f64..-30.0) {
        let geom = build_geometry(3, 5, 0.5).unwrap();
        let model = CouplingModel::default();
        let fe = random_frontend(15, 7, 0.3, &mut stream(seed, 1, 0)).unwrap();
        let n0 = 10f64.powf(n0_db / 10.0);
        let full = crlb_coefficients(
            &CrlbInputs::from_model(&geom, &model, fe.clone(), n0, MeasurementMask::full(15)).unwrap(),
        )
        .unwrap();
        let cut = crlb_coefficients(
            &CrlbInputs::from_model(&geom, &model, fe, n0, reduced_mask(&geom, 1.2).unwrap()).unwrap(),
        )
        .unwrap();
        for m in (0..15).filter(|&m| m != 7) {
            prop_assert!(cut.bound[m] >= full.bound[m] * (1.0 - 1e-9), "antenna {}", m);
        }
    }
}

#[test]
fn bound_is_linear_in_noise_without_diffuse_scattering() {
    let geom = build_geometry(2, 5, 0.5).unwrap();
    let fe = random_frontend(10, 4, 0.3, &mut stream(3, 1, 0)).unwrap();
    let h = draw_channel(&geom, &CouplingModel::default(), &mut stream(3, 2, 0)).unwrap();
    let bound = |n0: f64| {
        crlb_coefficients(
            &CrlbInputs::new(fe.clone(), h.clone(), 0.0, n0, MeasurementMask::full(10)).unwrap(),
        )
        .unwrap()
    };
    let (a, b) = (bound(1e-6), bound(1e-4));
    for m in (0..10).filter(|&m| m != 4) {
        assert!((b.bound[m] / a.bound[m] - 100.0).abs() < 1e-6, "antenna {m}");
    }
    assert!(a.bound[4].is_nan());
}
