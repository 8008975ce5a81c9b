//! Closed-form ML for a uniform linear array with adjacent-only coupling.
//!
//! On a chain the moment conditions decouple and can be satisfied exactly,
//! one neighbour at a time.

use num_complex::Complex64;

use super::{CalibrationEstimate, Constraint, Method};
use crate::error::{CalError, Result};
use crate::geometry::MeasurementMask;
use crate::sounding::SoundingData;

/// `ĉ_0 = 1`, `ĉ_{ℓ+1} = ĉ_ℓ · y*_{ℓ+1,ℓ} y_{ℓ,ℓ+1} / |y_{ℓ+1,ℓ}|²`.
///
/// The mask must be exactly the adjacent-pair chain `0-1-…-(M−1)`.
pub fn linear_array_ml(data: &SoundingData) -> Result<CalibrationEstimate> {
    let count = data.len();
    if count == 0 || data.mask() != &MeasurementMask::chain(count) {
        return Err(CalError::invalid(
            "linear-array ML needs the adjacent-pair chain mask",
        ));
    }
    let mut c = Vec::with_capacity(count);
    c.push(Complex64::new(1.0, 0.0));
    for l in 0..count - 1 {
        let down = data.raw(l + 1, l);
        let up = data.raw(l, l + 1);
        let p = down.norm_sqr();
        if !(p > 0.0) {
            return Err(CalError::Numerical(format!(
                "measurement y[{}][{l}] has zero magnitude",
                l + 1
            )));
        }
        let next = c[l] * down.conj() * up / p;
        c.push(next);
    }
    Ok(CalibrationEstimate {
        c_hat: c,
        method: Method::LinearMl,
        constraint: Constraint::RefOne { reference: 0 },
        iterations: 0,
        epsilon: 0.0,
        converged: true,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frontend::random_frontend;
    use crate::geometry::{build_geometry, draw_channel, CouplingModel};
    use crate::random::stream;
    use crate::sounding::sound;

    fn chain_data(count: usize, n0: f64, seed: u64) -> (SoundingData, Vec<Complex64>) {
        let g = build_geometry(1, count, 0.5).unwrap();
        let h = draw_channel(&g, &CouplingModel::default(), &mut stream(seed, 0, 0)).unwrap();
        let fe = random_frontend(count, 0, 0.1, &mut stream(seed, 1, 0)).unwrap();
        let y = sound(
            &h,
            &fe,
            n0,
            1.0,
            &MeasurementMask::chain(count),
            &mut stream(seed, 2, 0),
        )
        .unwrap();
        (y, fe.coefficients())
    }

    #[test]
    fn noiseless_chain_is_exact() {
        let (y, c) = chain_data(12, 0.0, 1);
        let e = linear_array_ml(&y).unwrap();
        for (a, b) in e.c_hat.iter().zip(&c) {
            assert!((a - b).norm() < 1e-12);
        }
    }

    #[test]
    fn every_moment_condition_holds_exactly() {
        let (y, _) = chain_data(20, 1e-4, 2);
        let e = linear_array_ml(&y).unwrap();
        for l in 0..19 {
            let f = y.get(l + 1, l).unwrap() * e.c_hat[l + 1] - y.get(l, l + 1).unwrap() * e.c_hat[l];
            assert!(f.norm() < 1e-12 * y.get(l, l + 1).unwrap().norm());
        }
    }

    #[test]
    fn rejects_other_masks_and_zero_measurements() {
        let (y, _) = chain_data(4, 0.0, 3);
        assert!(linear_array_ml(
            &y.restricted(&MeasurementMask::from_pairs(4, [(0, 1), (1, 2)]).unwrap())
                .unwrap()
        )
        .is_err());
        let zero = SoundingData::from_fn(MeasurementMask::chain(3), 0.0, |_, _| Complex64::new(0.0, 0.0));
        assert!(matches!(linear_array_ml(&zero), Err(CalError::Numerical(_))));
    }
}
