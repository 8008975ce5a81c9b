//! Transceiver front-end responses and the true calibration coefficients.

use std::f64::consts::TAU;

use num_complex::Complex64;
use rand::Rng;

use crate::error::{CalError, Result};

/// Per-antenna transmit gains `t` and receive gains `r` at the base station.
///
/// Constructors normalise so that `t[reference] = r[reference] = 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct FrontEnd {
    pub t: Vec<Complex64>,
    pub r: Vec<Complex64>,
    pub reference: usize,
}

impl FrontEnd {
    /// Wraps raw gains, validating the invariants without normalising.
    pub fn new(t: Vec<Complex64>, r: Vec<Complex64>, reference: usize) -> Result<Self> {
        if t.len() != r.len() {
            return Err(CalError::invalid(format!(
                "t has {} entries but r has {}",
                t.len(),
                r.len()
            )));
        }
        if reference >= t.len() {
            return Err(CalError::IndexOutOfRange {
                index: reference,
                count: t.len(),
            });
        }
        if let Some(m) = r.iter().position(|x| x.norm_sqr() == 0.0) {
            return Err(CalError::invalid(format!("receive gain r[{m}] is zero")));
        }
        if t[reference].norm_sqr() == 0.0 {
            return Err(CalError::invalid("transmit gain of the reference is zero"));
        }
        Ok(FrontEnd { t, r, reference })
    }

    /// Divides `t` by `t[ref]` and `r` by `r[ref]`.
    pub fn normalized(mut self) -> Self {
        let (t0, r0) = (self.t[self.reference], self.r[self.reference]);
        self.t.iter_mut().for_each(|x| *x /= t0);
        self.r.iter_mut().for_each(|x| *x /= r0);
        self.t[self.reference] = Complex64::new(1.0, 0.0);
        self.r[self.reference] = Complex64::new(1.0, 0.0);
        self
    }

    pub fn len(&self) -> usize {
        self.t.len()
    }

    pub fn is_empty(&self) -> bool {
        self.t.is_empty()
    }

    /// `c_m = t_m / r_m`.
    pub fn coefficients(&self) -> Vec<Complex64> {
        true_coefficients(self)
    }
}

pub fn true_coefficients(fe: &FrontEnd) -> Vec<Complex64> {
    fe.t.iter().zip(&fe.r).map(|(t, r)| t / r).collect()
}

/// Smoothly varying deterministic gains with roughly 10 % magnitude spread:
///
/// `t_m ∝ 0.9 + 0.2·m/M·exp(−j2πm/M)`, `r_m ∝ 0.9 + 0.2·(M−m)/M·exp(j2πm/M)`
///
/// with one-based `m`, normalised at `reference` (zero-based).
pub fn deterministic_frontend(count: usize, reference: usize) -> Result<FrontEnd> {
    if count == 0 {
        return Err(CalError::invalid("front-end needs at least one antenna"));
    }
    let mf = count as f64;
    let t = (1..=count)
        .map(|m| {
            let x = m as f64 / mf;
            Complex64::new(0.9, 0.0) + 0.2 * x * Complex64::from_polar(1.0, -TAU * x)
        })
        .collect();
    let r = (1..=count)
        .map(|m| {
            let x = m as f64 / mf;
            Complex64::new(0.9, 0.0) + 0.2 * (count - m) as f64 / mf * Complex64::from_polar(1.0, TAU * x)
        })
        .collect();
    Ok(FrontEnd::new(t, r, reference)?.normalized())
}

/// `(1 + U[−spread, spread])·exp(j·U[0, 2π))`, one draw per gain.
pub(crate) fn draw_gains<R: Rng + ?Sized>(count: usize, spread: f64, rng: &mut R) -> Vec<Complex64> {
    (0..count)
        .map(|_| {
            let mag = 1.0 + spread * (2.0 * rng.random::<f64>() - 1.0);
            Complex64::from_polar(mag, TAU * rng.random::<f64>())
        })
        .collect()
}

/// Independent random magnitudes and phases for `t` and `r`.
pub fn random_frontend<R: Rng + ?Sized>(
    count: usize,
    reference: usize,
    spread: f64,
    rng: &mut R,
) -> Result<FrontEnd> {
    if !(0.0..1.0).contains(&spread) {
        return Err(CalError::invalid(format!(
            "spread must lie in [0, 1), got {spread}"
        )));
    }
    if reference >= count {
        return Err(CalError::IndexOutOfRange {
            index: reference,
            count,
        });
    }
    let t = draw_gains(count, spread, rng);
    let r = draw_gains(count, spread, rng);
    Ok(FrontEnd::new(t, r, reference)?.normalized())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::random::stream;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn deterministic_reference_is_unity() {
        let fe = deterministic_frontend(100, 37).unwrap();
        assert_eq!(fe.coefficients()[37], c(1.0, 0.0));
        for m in [1usize, 2, 7, 64] {
            for r in 0..m {
                let fe = deterministic_frontend(m, r).unwrap();
                assert_eq!(true_coefficients(&fe)[r], c(1.0, 0.0));
            }
        }
        assert!(deterministic_frontend(10, 10).is_err());
    }

    #[test]
    fn deterministic_single_antenna() {
        let fe = deterministic_frontend(1, 0).unwrap();
        assert_eq!(fe.t, vec![c(1.0, 0.0)]);
        assert_eq!(fe.r, vec![c(1.0, 0.0)]);
        assert_eq!(fe.coefficients(), vec![c(1.0, 0.0)]);
    }

    #[test]
    fn deterministic_magnitude_spread() {
        // pre-normalisation magnitudes lie in [0.7, 1.1]
        let fe = deterministic_frontend(100, 0).unwrap();
        let t0 = (c(0.9, 0.0) + 0.2 * 0.01 * Complex64::from_polar(1.0, -TAU * 0.01)).norm();
        for t in &fe.t {
            let raw = t.norm() * t0;
            assert!((0.7 - 1e-12..=1.1 + 1e-12).contains(&raw), "{raw}");
        }
        let mean = fe.t.iter().map(|t| t.norm() * t0).sum::<f64>() / 100.0;
        let rel =
            fe.t.iter()
                .map(|t| (t.norm() * t0 / mean - 1.0).abs())
                .fold(0.0, f64::max);
        assert!(rel < 0.25 && rel > 0.05, "{rel}");
    }

    #[test]
    fn random_spread_zero_has_unit_magnitudes() {
        let fe = random_frontend(16, 3, 0.0, &mut stream(1, 0, 0)).unwrap();
        for (t, r) in fe.t.iter().zip(&fe.r) {
            assert!((t.norm() - 1.0).abs() < 1e-12);
            assert!((r.norm() - 1.0).abs() < 1e-12);
        }
        assert_eq!(fe.coefficients()[3], c(1.0, 0.0));
    }

    #[test]
    fn random_gain_range() {
        let g = draw_gains(100_000, 0.1, &mut stream(2, 0, 0));
        let (lo, hi) = g.iter().fold((f64::MAX, f64::MIN), |(lo, hi), z| {
            (lo.min(z.norm()), hi.max(z.norm()))
        });
        assert!(lo >= 0.9 - 1e-12 && hi <= 1.1 + 1e-12);
        assert!(lo < 0.901 && hi > 1.099, "range not covered: {lo} {hi}");
    }

    #[test]
    fn random_rejects_bad_spread_and_is_deterministic() {
        assert!(random_frontend(4, 0, 1.0, &mut stream(0, 0, 0)).is_err());
        assert!(random_frontend(4, 0, -0.1, &mut stream(0, 0, 0)).is_err());
        let a = random_frontend(8, 2, 0.1, &mut stream(9, 1, 1)).unwrap();
        let b = random_frontend(8, 2, 0.1, &mut stream(9, 1, 1)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn coefficient_examples() {
        let t = vec![c(0.3, 0.4); 3];
        let fe = FrontEnd::new(t.clone(), t, 0).unwrap();
        assert!(fe.coefficients().iter().all(|x| *x == c(1.0, 0.0)));

        let fe = FrontEnd::new(vec![c(2.0, 0.0); 2], vec![c(1.0, 1.0); 2], 0).unwrap();
        for x in fe.coefficients() {
            assert!((x - c(1.0, -1.0)).norm() < 1e-15);
        }
        assert!(FrontEnd::new(vec![c(1.0, 0.0)], vec![c(0.0, 0.0)], 0).is_err());
    }

    #[test]
    fn coefficients_are_homogeneous_in_t() {
        let fe = deterministic_frontend(12, 4).unwrap();
        let alpha = c(-0.7, 1.3);
        let scaled = FrontEnd {
            t: fe.t.iter().map(|t| alpha * t).collect(),
            ..fe.clone()
        };
        for (a, b) in scaled.coefficients().iter().zip(fe.coefficients()) {
            assert!((a - alpha * b).norm() < 1e-14);
        }
    }
}
