//! Moment-condition (GMM) estimator with identity weighting.
//!
//! The cost `Σ_{n<m} |y_{n,m} c_n − y_{m,n} c_m|²` is the Hermitian form
//! `c^H Q c`, so both constraints have closed forms: the smallest
//! eigenvector of `Q` for `‖c‖ = 1`, and a reduced linear system for
//! `c_ref = 1`.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;

use super::{CalibrationEstimate, Constraint, Method};
use crate::error::{CalError, Result};
use crate::sounding::SoundingData;

/// Assembles `Q` from the measured pairs.
pub fn gmm_cost_matrix(data: &SoundingData) -> DMatrix<Complex64> {
    let m = data.len();
    let mut q = DMatrix::<Complex64>::zeros(m, m);
    for &(n, k) in data.mask().pairs() {
        let a = data.raw(n, k);
        let b = data.raw(k, n);
        q[(n, n)] += a.norm_sqr();
        q[(k, k)] += b.norm_sqr();
        let off = a.conj() * b;
        q[(n, k)] -= off;
        q[(k, n)] -= off.conj();
    }
    q
}

/// Direct evaluation of the moment cost.
pub fn gmm_cost(data: &SoundingData, c: &[Complex64]) -> f64 {
    data.mask()
        .pairs()
        .iter()
        .map(|&(n, m)| (data.raw(n, m) * c[n] - data.raw(m, n) * c[m]).norm_sqr())
        .sum()
}

pub fn gmm_estimate(data: &SoundingData, constraint: Constraint) -> Result<CalibrationEstimate> {
    let m = data.len();
    if data.mask().is_empty() {
        return Err(CalError::Identifiability("measurement mask is empty".into()));
    }
    if !data.mask().is_connected() {
        return Err(CalError::Identifiability(
            "measured pairs do not connect every antenna".into(),
        ));
    }
    let q = gmm_cost_matrix(data);
    let c_hat = match constraint {
        Constraint::RefOne { reference } => {
            check_ref(reference, m)?;
            solve_ref_one(&q, reference)?
        }
        Constraint::UnitNorm { reference } => {
            check_ref(reference, m)?;
            smallest_eigenvector(q, reference)?
        }
        Constraint::None => {
            return Err(CalError::invalid("GMM needs a non-degeneracy constraint"));
        }
    };
    Ok(CalibrationEstimate {
        c_hat,
        method: Method::Gmm,
        constraint,
        iterations: 0,
        epsilon: 0.0,
        converged: true,
    })
}

fn check_ref(reference: usize, m: usize) -> Result<()> {
    if reference >= m {
        return Err(CalError::IndexOutOfRange {
            index: reference,
            count: m,
        });
    }
    Ok(())
}

/// Stationary point of `c^H Q c` with `c_ref` pinned to one:
/// `Q_rr c_r = −Q_{r,ref}`.
fn solve_ref_one(q: &DMatrix<Complex64>, reference: usize) -> Result<Vec<Complex64>> {
    let m = q.nrows();
    let one = Complex64::new(1.0, 0.0);
    if m == 1 {
        return Ok(vec![one]);
    }
    let keep: Vec<usize> = (0..m).filter(|&i| i != reference).collect();
    let reduced = DMatrix::from_fn(m - 1, m - 1, |i, j| q[(keep[i], keep[j])]);
    let rhs = DVector::from_iterator(m - 1, keep.iter().map(|&i| -q[(i, reference)]));
    let chol = reduced.clone().cholesky().ok_or_else(|| {
        let min_diag = (0..m - 1)
            .map(|i| reduced[(i, i)].re)
            .fold(f64::INFINITY, f64::min);
        CalError::Numerical(format!(
            "reduced GMM system is not positive definite (smallest diagonal entry {min_diag:e})"
        ))
    })?;
    let sol = chol.solve(&rhs);
    if sol.iter().any(|v| !v.is_finite()) {
        return Err(CalError::Numerical(
            "reduced GMM system produced non-finite values".into(),
        ));
    }
    let mut c = vec![one; m];
    for (k, &i) in keep.iter().enumerate() {
        c[i] = sol[k];
    }
    Ok(c)
}

fn smallest_eigenvector(q: DMatrix<Complex64>, reference: usize) -> Result<Vec<Complex64>> {
    let eig = SymmetricEigen::new(q);
    let (idx, _) = eig
        .eigenvalues
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))
        .ok_or_else(|| CalError::Numerical("empty eigen-decomposition".into()))?;
    let v = eig.eigenvectors.column(idx);
    let norm = v.norm();
    if !(norm > 0.0) {
        return Err(CalError::Numerical("zero eigenvector".into()));
    }
    let pivot = v[reference];
    let rot = if pivot.norm() > 0.0 {
        pivot.conj() / pivot.norm()
    } else {
        Complex64::new(1.0, 0.0)
    };
    Ok(v.iter().map(|x| x * rot / norm).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frontend::{deterministic_frontend, random_frontend};
    use crate::geometry::{build_geometry, draw_channel, CouplingModel, MeasurementMask};
    use crate::random::stream;
    use crate::sounding::sound;

    fn data(rows: usize, cols: usize, n0: f64, seed: u64) -> (SoundingData, Vec<Complex64>) {
        let g = build_geometry(rows, cols, 0.5).unwrap();
        let h = draw_channel(&g, &CouplingModel::default(), &mut stream(seed, 0, 0)).unwrap();
        let fe = random_frontend(g.len(), 0, 0.1, &mut stream(seed, 1, 0)).unwrap();
        let y = sound(
            &h,
            &fe,
            n0,
            1.0,
            &MeasurementMask::full(g.len()),
            &mut stream(seed, 2, 0),
        )
        .unwrap();
        (y, fe.coefficients())
    }

    #[test]
    fn noiseless_ref_one_is_exact() {
        let g = build_geometry(3, 5, 0.5).unwrap();
        let h = draw_channel(&g, &CouplingModel::default(), &mut stream(1, 0, 0)).unwrap();
        let fe = deterministic_frontend(15, 7).unwrap();
        let c = fe.coefficients();
        let y = sound(
            &h,
            &fe,
            0.0,
            1.0,
            &MeasurementMask::full(15),
            &mut stream(0, 0, 0),
        )
        .unwrap();
        let e = gmm_estimate(&y, Constraint::RefOne { reference: 7 }).unwrap();
        assert_eq!(e.c_hat[7], Complex64::new(1.0, 0.0));
        for (a, b) in e.c_hat.iter().zip(&c) {
            assert!((a - b).norm() < 1e-9, "{a} {b}");
        }
        assert!(gmm_cost(&y, &e.c_hat) < 1e-20);
    }

    #[test]
    fn two_antennas_closed_form() {
        let (y, _) = data(1, 2, 1e-3, 4);
        let e = gmm_estimate(&y, Constraint::RefOne { reference: 0 }).unwrap();
        let y21 = y.get(1, 0).unwrap();
        let y12 = y.get(0, 1).unwrap();
        let expect = y21.conj() * y12 / y21.norm_sqr();
        assert!((e.c_hat[1] - expect).norm() < 1e-12 * expect.norm());
    }

    #[test]
    fn unit_norm_parallel_to_truth_when_noiseless() {
        let (y, c) = data(2, 2, 0.0, 9);
        let e = gmm_estimate(&y, Constraint::UnitNorm { reference: 1 }).unwrap();
        let norm: f64 = e.c_hat.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt();
        assert!((norm - 1.0).abs() < 1e-12);
        let inner: Complex64 = e.c_hat.iter().zip(&c).map(|(a, b)| a.conj() * b).sum();
        let cn: f64 = c.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt();
        assert!((inner.norm() - cn).abs() < 1e-10 * cn);
        assert!(e.c_hat[1].im.abs() < 1e-14 && e.c_hat[1].re > 0.0);
    }

    #[test]
    fn q_is_hermitian_psd_and_matches_direct_cost() {
        let (y, _) = data(3, 3, 1e-2, 11);
        let q = gmm_cost_matrix(&y);
        assert!((&q - q.adjoint()).norm() < 1e-15 * q.norm());
        let eig = SymmetricEigen::new(q.clone());
        let min = eig.eigenvalues.iter().cloned().fold(f64::INFINITY, f64::min);
        assert!(min >= -1e-10 * q.norm());
        let c: Vec<Complex64> = (0..9)
            .map(|k| Complex64::new(k as f64 * 0.1 - 0.3, 0.7 - k as f64 * 0.05))
            .collect();
        let cv = DVector::from_vec(c.clone());
        let quad = (cv.adjoint() * &q * &cv)[(0, 0)];
        assert!((quad.re - gmm_cost(&y, &c)).abs() < 1e-12 * quad.re);
        assert!(quad.im.abs() < 1e-12 * quad.re);
        // global phase invariance
        let rot: Vec<Complex64> = c.iter().map(|x| x * Complex64::from_polar(1.0, 1.1)).collect();
        assert!((gmm_cost(&y, &rot) - gmm_cost(&y, &c)).abs() < 1e-12 * quad.re);
    }

    #[test]
    fn real_scaling_leaves_ref_one_estimate_unchanged() {
        let (y, _) = data(2, 4, 1e-3, 3);
        let a = gmm_estimate(&y, Constraint::RefOne { reference: 2 }).unwrap();
        let b = gmm_estimate(
            &y.scaled(Complex64::new(-3.7, 0.0)),
            Constraint::RefOne { reference: 2 },
        )
        .unwrap();
        for (x, z) in a.c_hat.iter().zip(&b.c_hat) {
            assert!((x - z).norm() < 1e-10);
        }
    }

    #[test]
    fn disconnected_mask_is_not_identifiable() {
        let g = build_geometry(1, 4, 0.5).unwrap();
        let h = draw_channel(&g, &CouplingModel::default(), &mut stream(1, 0, 0)).unwrap();
        let fe = deterministic_frontend(4, 0).unwrap();
        let mask = MeasurementMask::from_pairs(4, [(0, 1), (2, 3)]).unwrap();
        let y = sound(&h, &fe, 0.0, 1.0, &mask, &mut stream(0, 0, 0)).unwrap();
        let err = gmm_estimate(&y, Constraint::RefOne { reference: 0 }).unwrap_err();
        assert!(matches!(err, CalError::Identifiability(_)));
        let empty = MeasurementMask::from_pairs(4, []).unwrap();
        let y = sound(&h, &fe, 0.0, 1.0, &empty, &mut stream(0, 0, 0)).unwrap();
        assert!(gmm_estimate(&y, Constraint::UnitNorm { reference: 0 }).is_err());
    }

    #[test]
    fn singular_reduced_system_reports_numerical_error() {
        let mask = MeasurementMask::full(3);
        let y = SoundingData::from_fn(mask, 0.0, |_, _| Complex64::new(0.0, 0.0));
        let err = gmm_estimate(&y, Constraint::RefOne { reference: 0 }).unwrap_err();
        assert!(matches!(err, CalError::Numerical(_)), "{err}");
    }
}
