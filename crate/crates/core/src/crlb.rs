//! Cramér-Rao bound on the calibration coefficients.
//!
//! Each measured unordered pair `(n, m)` contributes an independent complex
//! Gaussian 2-vector `[y_{n,m}, y_{m,n}]` with mean `h̄·v` and covariance
//! `σ² v v^H + N0 I`, where `v = [r_n t_m, r_m t_n]`. The unknowns are the
//! real and imaginary parts of `t` and `r` for every antenna except the
//! reference, whose gains are pinned to one. Only eight parameters touch a
//! given pair, so the Fisher matrix is assembled pair by pair.

use nalgebra::{DMatrix, Matrix2, SymmetricEigen, Vector2};
use num_complex::Complex64;

use crate::error::{CalError, Result};
use crate::frontend::FrontEnd;
use crate::geometry::{coupling_amplitudes, ArrayGeometry, ChannelMatrix, CouplingModel, MeasurementMask};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const J: Complex64 = Complex64::new(0.0, 1.0);

#[derive(Debug, Clone)]
pub struct CrlbInputs {
    pub fe: FrontEnd,
    /// Deterministic coupling `h̄`, known to the bound.
    pub hbar: ChannelMatrix,
    pub sigma2: f64,
    pub n0: f64,
    pub mask: MeasurementMask,
}

impl CrlbInputs {
    pub fn new(
        fe: FrontEnd,
        hbar: ChannelMatrix,
        sigma2: f64,
        n0: f64,
        mask: MeasurementMask,
    ) -> Result<Self> {
        let count = fe.len();
        if hbar.len() != count || mask.antenna_count() != count {
            return Err(CalError::invalid(format!(
                "size mismatch: front-end {count}, coupling {}, mask {}",
                hbar.len(),
                mask.antenna_count()
            )));
        }
        if !(sigma2 >= 0.0 && n0 >= 0.0) {
            return Err(CalError::invalid("variances must be >= 0"));
        }
        if n0 == 0.0 && sigma2 == 0.0 {
            return Err(CalError::invalid(
                "pair covariance is singular when N0 = sigma2 = 0",
            ));
        }
        let one = Complex64::new(1.0, 0.0);
        let r = fe.reference;
        if (fe.t[r] - one).norm() > 1e-12 || (fe.r[r] - one).norm() > 1e-12 {
            return Err(CalError::Identifiability(
                "reference gains must be t_ref = r_ref = 1".into(),
            ));
        }
        Ok(CrlbInputs {
            fe,
            hbar,
            sigma2,
            n0,
            mask,
        })
    }

    /// Uses the model's coupling magnitudes; the bound does not depend on
    /// the coupling phases.
    pub fn from_model(
        geom: &ArrayGeometry,
        model: &CouplingModel,
        fe: FrontEnd,
        n0: f64,
        mask: MeasurementMask,
    ) -> Result<Self> {
        let hbar = coupling_amplitudes(geom, model)?;
        Self::new(fe, hbar, model.sigma2, n0, mask)
    }

    pub fn len(&self) -> usize {
        self.fe.len()
    }

    pub fn is_empty(&self) -> bool {
        self.fe.is_empty()
    }

    /// Number of real parameters, `4(M − 1)`.
    pub fn parameter_count(&self) -> usize {
        4 * (self.len() - 1)
    }

    /// Position of antenna `m`'s block in `θ`, `None` for the reference.
    pub fn parameter_offset(&self, m: usize) -> Option<usize> {
        let r = self.fe.reference;
        match m.cmp(&r) {
            std::cmp::Ordering::Less => Some(4 * m),
            std::cmp::Ordering::Equal => None,
            std::cmp::Ordering::Greater => Some(4 * (m - 1)),
        }
    }

    /// `θ = [Re t, Im t, Re r, Im r]` per non-reference antenna.
    pub fn theta(&self) -> Vec<f64> {
        let mut theta = Vec::with_capacity(self.parameter_count());
        for m in (0..self.len()).filter(|&m| m != self.fe.reference) {
            let (t, r) = (self.fe.t[m], self.fe.r[m]);
            theta.extend_from_slice(&[t.re, t.im, r.re, r.im]);
        }
        theta
    }

    /// Copy with front-end gains replaced by `theta`.
    pub fn with_theta(&self, theta: &[f64]) -> Self {
        assert_eq!(theta.len(), self.parameter_count(), "theta length mismatch");
        let mut out = self.clone();
        for m in 0..self.len() {
            if let Some(o) = self.parameter_offset(m) {
                out.fe.t[m] = Complex64::new(theta[o], theta[o + 1]);
                out.fe.r[m] = Complex64::new(theta[o + 2], theta[o + 3]);
            }
        }
        out
    }

    fn v(&self, n: usize, m: usize) -> Vector2<Complex64> {
        let fe = &self.fe;
        Vector2::new(fe.r[n] * fe.t[m], fe.r[m] * fe.t[n])
    }
}

/// Mean and covariance of `[y_{n,m}, y_{m,n}]`.
pub fn pair_statistics(inputs: &CrlbInputs, n: usize, m: usize) -> (Vector2<Complex64>, Matrix2<Complex64>) {
    assert!(n != m, "pair statistics undefined on the diagonal (antenna {n})");
    let v = inputs.v(n, m);
    let mean = v * inputs.hbar.get(n, m);
    let cov =
        v * v.adjoint() * Complex64::from(inputs.sigma2) + Matrix2::identity() * Complex64::from(inputs.n0);
    (mean, cov)
}

/// Non-zero partial derivatives of one pair's statistics.
#[derive(Debug, Clone)]
pub struct PairDerivative {
    /// Index into `θ`.
    pub parameter: usize,
    pub mean: Vector2<Complex64>,
    pub cov: Matrix2<Complex64>,
}

/// Analytic `∂μ/∂θ_i` and `∂Σ/∂θ_i` for every `θ_i` the pair depends on.
pub fn pair_derivatives(inputs: &CrlbInputs, n: usize, m: usize) -> Vec<PairDerivative> {
    assert!(n != m, "pair derivatives undefined on the diagonal (antenna {n})");
    let fe = &inputs.fe;
    let v = inputs.v(n, m);
    let h = inputs.hbar.get(n, m);
    let s2 = Complex64::from(inputs.sigma2);
    let mut out = Vec::with_capacity(8);
    let mut push = |antenna: usize, slot: usize, dv: Vector2<Complex64>| {
        if let Some(o) = inputs.parameter_offset(antenna) {
            let dcov = (dv * v.adjoint() + v * dv.adjoint()) * s2;
            out.push(PairDerivative {
                parameter: o + slot,
                mean: dv * h,
                cov: dcov,
            });
        }
    };
    // v1 = r_n t_m, v2 = r_m t_n
    push(m, 0, Vector2::new(fe.r[n], ZERO));
    push(m, 1, Vector2::new(J * fe.r[n], ZERO));
    push(n, 2, Vector2::new(fe.t[m], ZERO));
    push(n, 3, Vector2::new(J * fe.t[m], ZERO));
    push(n, 0, Vector2::new(ZERO, fe.r[m]));
    push(n, 1, Vector2::new(ZERO, J * fe.r[m]));
    push(m, 2, Vector2::new(ZERO, fe.t[n]));
    push(m, 3, Vector2::new(ZERO, J * fe.t[n]));
    out
}

/// Fisher information of `θ`.
pub fn fisher_information(inputs: &CrlbInputs) -> Result<DMatrix<f64>> {
    let p = inputs.parameter_count();
    let mut fim = DMatrix::<f64>::zeros(p, p);
    for &(n, m) in inputs.mask.pairs() {
        let (_, cov) = pair_statistics(inputs, n, m);
        let inv = cov
            .try_inverse()
            .ok_or_else(|| CalError::Numerical(format!("pair ({n}, {m}) covariance is singular")))?;
        let ders = pair_derivatives(inputs, n, m);
        let a: Vec<Matrix2<Complex64>> = ders.iter().map(|d| inv * d.cov).collect();
        let b: Vec<Vector2<Complex64>> = ders.iter().map(|d| inv * d.mean).collect();
        for (i, di) in ders.iter().enumerate() {
            for (j, dj) in ders.iter().enumerate().skip(i) {
                let trace = (a[i] * a[j]).trace().re;
                let mean = 2.0 * (di.mean.adjoint() * b[j])[(0, 0)].re;
                let val = trace + mean;
                fim[(di.parameter, dj.parameter)] += val;
                if di.parameter != dj.parameter {
                    fim[(dj.parameter, di.parameter)] += val;
                }
            }
        }
    }
    Ok(fim)
}

/// Per-antenna lower bounds on `var(ĉ_m)`.
#[derive(Debug, Clone, PartialEq)]
pub struct CrlbReport {
    /// `NaN` at the reference antenna.
    pub bound: Vec<f64>,
    pub reference: usize,
    /// Ratio of the largest to the smallest Fisher eigenvalue.
    pub fim_condition: f64,
}

impl CrlbReport {
    pub fn bound_db(&self, m: usize) -> f64 {
        crate::to_db(self.bound[m])
    }
}

/// `∂q_m/∂θ` over antenna `m`'s four parameters, `q_m = t_m / r_m`.
fn coefficient_jacobian(t: Complex64, r: Complex64) -> [Complex64; 4] {
    let inv = 1.0 / r;
    let dr = -t * inv * inv;
    [inv, J * inv, dr, J * dr]
}

pub fn crlb_coefficients(inputs: &CrlbInputs) -> Result<CrlbReport> {
    let count = inputs.len();
    if count < 2 {
        return Err(CalError::invalid("the bound needs at least two antennas"));
    }
    let fim = fisher_information(inputs)?;
    let eig = SymmetricEigen::new(fim.clone());
    let (lo, hi) = eig
        .eigenvalues
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &e| {
            (lo.min(e), hi.max(e))
        });
    let fim_condition = if lo > 0.0 { hi / lo } else { f64::INFINITY };
    let not_invertible = || {
        CalError::Identifiability(format!(
            "Fisher information is not invertible (condition {fim_condition:e}); the mask must \
             connect every antenna and the reference gains must be fixed to one"
        ))
    };
    if !(lo > hi * 1e-15) {
        return Err(not_invertible());
    }
    let chol = fim.cholesky().ok_or_else(not_invertible)?;
    let inv = chol.inverse();
    let mut bound = vec![f64::NAN; count];
    for (m, b) in bound.iter_mut().enumerate() {
        let Some(o) = inputs.parameter_offset(m) else {
            continue;
        };
        let jac = coefficient_jacobian(inputs.fe.t[m], inputs.fe.r[m]);
        let mut v = 0.0;
        for i in 0..4 {
            for k in 0..4 {
                v += (jac[i] * jac[k].conj()).re * inv[(o + i, o + k)];
            }
        }
        *b = v;
    }
    Ok(CrlbReport {
        bound,
        reference: inputs.fe.reference,
        fim_condition,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frontend::{deterministic_frontend, random_frontend};
    use crate::geometry::{build_geometry, draw_coupling, reduced_mask};
    use crate::random::stream;

    fn inputs(rows: usize, cols: usize, reference: usize, n0: f64, sigma2: f64) -> CrlbInputs {
        let g = build_geometry(rows, cols, 0.5).unwrap();
        let model = CouplingModel {
            sigma2,
            ..CouplingModel::default()
        };
        let fe = deterministic_frontend(g.len(), reference).unwrap();
        CrlbInputs::from_model(&g, &model, fe, n0, MeasurementMask::full(g.len())).unwrap()
    }

    #[test]
    fn pair_statistics_examples() {
        let mut inp = inputs(1, 3, 0, 1e-3, 0.0);
        let (_, cov) = pair_statistics(&inp, 0, 2);
        assert!((cov - Matrix2::identity() * Complex64::from(1e-3)).norm() < 1e-18);

        let one = vec![Complex64::new(1.0, 0.0); 3];
        inp.fe = FrontEnd::new(one.clone(), one, 0).unwrap();
        inp.sigma2 = 0.5;
        let (mean, cov) = pair_statistics(&inp, 1, 2);
        let h = inp.hbar.get(1, 2);
        assert_eq!(mean, Vector2::new(h, h));
        let expect =
            Matrix2::from_element(Complex64::from(0.5)) + Matrix2::identity() * Complex64::from(1e-3);
        assert!((cov - expect).norm() < 1e-15);
    }

    #[test]
    fn derivatives_match_central_differences() {
        let g = build_geometry(1, 4, 0.5).unwrap();
        let model = CouplingModel {
            sigma2: 1e-3,
            ..CouplingModel::default()
        };
        let fe = random_frontend(4, 1, 0.1, &mut stream(3, 0, 0)).unwrap();
        let hbar = draw_coupling(&g, &model, &mut stream(3, 1, 0)).unwrap();
        let inp = CrlbInputs::new(fe, hbar, model.sigma2, 1e-4, MeasurementMask::full(4)).unwrap();
        let theta = inp.theta();
        let step = 1e-6;
        for &(n, m) in inp.mask.pairs() {
            let ders = pair_derivatives(&inp, n, m);
            for i in 0..theta.len() {
                let mut up = theta.clone();
                let mut dn = theta.clone();
                up[i] += step;
                dn[i] -= step;
                let (mu_u, cov_u) = pair_statistics(&inp.with_theta(&up), n, m);
                let (mu_d, cov_d) = pair_statistics(&inp.with_theta(&dn), n, m);
                let fd_mu = (mu_u - mu_d) / Complex64::from(2.0 * step);
                let fd_cov = (cov_u - cov_d) / Complex64::from(2.0 * step);
                let (an_mu, an_cov) = ders
                    .iter()
                    .find(|d| d.parameter == i)
                    .map(|d| (d.mean, d.cov))
                    .unwrap_or((Vector2::zeros(), Matrix2::zeros()));
                let scale_mu = an_mu.norm().max(1e-12 * mu_u.norm());
                let scale_cov = an_cov.norm().max(1e-12 * cov_u.norm());
                assert!(
                    (fd_mu - an_mu).norm() <= 1e-5 * scale_mu + 1e-14,
                    "mu {n},{m},{i}"
                );
                assert!(
                    (fd_cov - an_cov).norm() <= 1e-5 * scale_cov + 1e-14,
                    "cov {n},{m},{i}"
                );
            }
        }
    }

    #[test]
    fn fisher_is_symmetric_psd() {
        let inp = inputs(2, 3, 2, 1e-4, 1e-5);
        let fim = fisher_information(&inp).unwrap();
        assert_eq!(fim.nrows(), 20);
        assert!((&fim - fim.transpose()).norm() < 1e-12 * fim.norm());
        let eig = SymmetricEigen::new(fim.clone());
        assert!(eig.eigenvalues.min() >= -1e-8 * fim.norm());
    }

    #[test]
    fn fisher_scales_with_inverse_noise_without_diffuse_term() {
        let a = fisher_information(&inputs(2, 2, 0, 1e-4, 0.0)).unwrap();
        let b = fisher_information(&inputs(2, 2, 0, 2e-4, 0.0)).unwrap();
        assert!((&a * 0.5 - b).norm() < 1e-10 * a.norm());
    }

    #[test]
    fn bound_ignores_coupling_phases() {
        let g = build_geometry(2, 3, 0.5).unwrap();
        let model = CouplingModel::default();
        let fe = deterministic_frontend(6, 1).unwrap();
        let mask = MeasurementMask::full(6);
        let mk = |seed| {
            let hbar = draw_coupling(&g, &model, &mut stream(seed, 0, 0)).unwrap();
            let inp = CrlbInputs::new(fe.clone(), hbar, model.sigma2, 1e-5, mask.clone()).unwrap();
            crlb_coefficients(&inp).unwrap()
        };
        let (a, b) = (mk(1), mk(2));
        for m in (0..6).filter(|&m| m != 1) {
            assert!((a.bound[m] - b.bound[m]).abs() <= 1e-10 * a.bound[m]);
            assert!(a.bound[m] > 0.0);
        }
        assert!(a.bound[1].is_nan());
    }

    #[test]
    fn more_pairs_never_loosen_the_bound() {
        let g = build_geometry(3, 4, 0.5).unwrap();
        let model = CouplingModel::default();
        let fe = deterministic_frontend(12, 5).unwrap();
        let mut prev: Option<CrlbReport> = None;
        for radius in [0.5, 1.0 / 2f64.sqrt(), 1.0, 1.5, f64::INFINITY] {
            let mask = reduced_mask(&g, radius).unwrap();
            let inp = CrlbInputs::from_model(&g, &model, fe.clone(), 1e-5, mask).unwrap();
            let rep = crlb_coefficients(&inp).unwrap();
            if let Some(p) = &prev {
                for m in (0..12).filter(|&m| m != 5) {
                    assert!(
                        rep.bound[m] <= p.bound[m] * (1.0 + 1e-10),
                        "radius {radius} m {m}"
                    );
                }
            }
            prev = Some(rep);
        }
    }

    #[test]
    fn unnormalised_reference_and_disconnected_mask_are_rejected() {
        let g = build_geometry(1, 4, 0.5).unwrap();
        let model = CouplingModel::default();
        let mut fe = deterministic_frontend(4, 0).unwrap();
        fe.t[0] = Complex64::new(2.0, 0.0);
        let err = CrlbInputs::from_model(&g, &model, fe, 1e-4, MeasurementMask::full(4)).unwrap_err();
        assert!(matches!(err, CalError::Identifiability(_)));

        let fe = deterministic_frontend(4, 0).unwrap();
        let mask = MeasurementMask::from_pairs(4, [(0, 1), (2, 3)]).unwrap();
        let inp = CrlbInputs::from_model(&g, &model, fe, 1e-4, mask).unwrap();
        assert!(matches!(
            crlb_coefficients(&inp),
            Err(CalError::Identifiability(_))
        ));
    }
}
