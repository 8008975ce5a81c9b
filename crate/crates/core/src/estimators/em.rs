//! Penalized ML by alternating closed-form updates.
//!
//! The model `y_{n,m} = ψ_{n,m} c_m` with symmetric `Ψ` is bilinear, so each
//! block has a scalar ridge solution:
//!
//! - `ψ_{n,m} ← (y_{m,n} c_n* + y_{n,m} c_m*) / (|c_n|² + |c_m|² + 2ε)`
//! - `c_m ← Σ_n ψ_{n,m}* y_{n,m} / (ε + Σ_n |ψ_{n,m}|²)`
//!
//! Both sums run over the measured partners only, one pass over the mask per
//! half-step.

use num_complex::Complex64;

use super::gmm::gmm_estimate;
use super::{CalibrationEstimate, Constraint, EmInit, EmSettings, Method};
use crate::error::{CalError, Result};
use crate::random::{stream, unit_phasor};
use crate::sounding::SoundingData;

const RANDOM_INIT_DOMAIN: u64 = 0x0065_6d5f_696e_6974;

/// Measured values of one unordered pair `(n, m)`, `n < m`:
/// `a = y_{n,m}`, `b = y_{m,n}`.
#[derive(Clone, Copy)]
struct PairObs {
    n: usize,
    m: usize,
    a: Complex64,
    b: Complex64,
}

fn pair_obs(data: &SoundingData) -> Vec<PairObs> {
    data.mask()
        .pairs()
        .iter()
        .map(|&(n, m)| PairObs {
            n,
            m,
            a: data.raw(n, m),
            b: data.raw(m, n),
        })
        .collect()
}

/// State after one full iteration, handed to the observer of [`em_solve`].
pub struct EmIteration<'a> {
    pub iteration: usize,
    /// `‖ĉ_new − ĉ_old‖²`.
    pub delta: f64,
    pub c: &'a [Complex64],
    /// One entry per pair of `data.mask().pairs()`.
    pub psi: &'a [Complex64],
    data: &'a SoundingData,
    epsilon: f64,
}

impl EmIteration<'_> {
    pub fn objective(&self) -> f64 {
        penalized_objective(self.data, self.c, self.psi, self.epsilon)
    }
}

#[derive(Debug, Clone)]
pub struct EmSolution {
    pub estimate: CalibrationEstimate,
    /// Final `ψ̂`, one entry per measured unordered pair.
    pub psi: Vec<Complex64>,
}

/// Runs EM and returns only the coefficient estimate.
pub fn em_calibrate(data: &SoundingData, settings: &EmSettings) -> Result<CalibrationEstimate> {
    em_solve(data, settings, |_| {}).map(|s| s.estimate)
}

/// Runs EM, calling `observer` after every iteration.
///
/// Hitting `max_iter` is not an error: the last iterate is returned with
/// `converged = false`.
pub fn em_solve(
    data: &SoundingData,
    settings: &EmSettings,
    mut observer: impl FnMut(&EmIteration),
) -> Result<EmSolution> {
    settings.validate()?;
    let count = data.len();
    if data.mask().is_empty() || !data.mask().is_connected() {
        return Err(CalError::Identifiability(
            "measured pairs do not connect every antenna".into(),
        ));
    }
    let mut c = initial_guess(data, &settings.init)?;
    if c.len() != count {
        return Err(CalError::invalid(format!(
            "initial guess has {} entries, expected {count}",
            c.len()
        )));
    }
    let init_norm = norm(&c);
    if !(init_norm > 0.0) || !init_norm.is_finite() {
        return Err(CalError::invalid("initial guess must be finite and nonzero"));
    }

    let obs = pair_obs(data);
    let eps = settings.epsilon;
    let max_iter = settings.max_iter.unwrap_or(50 * count);
    let mut psi = vec![Complex64::new(0.0, 0.0); obs.len()];
    let mut num = vec![Complex64::new(0.0, 0.0); count];
    let mut den = vec![0.0; count];
    let mut iterations = 0;
    let mut converged = false;

    while iterations < max_iter {
        update_psi(&obs, &c, eps, &mut psi)?;
        accumulate(&obs, &psi, &mut num, &mut den);
        let mut delta = 0.0;
        for m in 0..count {
            let d = eps + den[m];
            if !(d > 0.0) {
                return Err(CalError::Degenerate(format!(
                    "all equivalent channels of antenna {m} vanished"
                )));
            }
            let next = num[m] / d;
            delta += (next - c[m]).norm_sqr();
            c[m] = next;
        }
        iterations += 1;
        if norm(&c) < 1e-12 * init_norm {
            return Err(CalError::Degenerate(format!(
                "coefficients collapsed to zero after {iterations} iterations"
            )));
        }
        if !delta.is_finite() {
            return Err(CalError::Numerical("EM produced non-finite coefficients".into()));
        }
        observer(&EmIteration {
            iteration: iterations,
            delta,
            c: &c,
            psi: &psi,
            data,
            epsilon: eps,
        });
        if delta < settings.delta_ml {
            converged = true;
            break;
        }
    }

    Ok(EmSolution {
        estimate: CalibrationEstimate {
            c_hat: c,
            method: Method::Em,
            constraint: Constraint::None,
            iterations,
            epsilon: eps,
            converged,
        },
        psi,
    })
}

fn initial_guess(data: &SoundingData, init: &EmInit) -> Result<Vec<Complex64>> {
    match init {
        EmInit::Gmm { reference } => Ok(gmm_estimate(
            data,
            Constraint::RefOne {
                reference: *reference,
            },
        )?
        .c_hat),
        EmInit::Random { seed } => {
            let mut rng = stream(*seed, RANDOM_INIT_DOMAIN, 0);
            Ok((0..data.len()).map(|_| unit_phasor(&mut rng)).collect())
        }
        EmInit::Explicit(c) => Ok(c.clone()),
    }
}

fn norm(c: &[Complex64]) -> f64 {
    c.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt()
}

fn update_psi(obs: &[PairObs], c: &[Complex64], eps: f64, psi: &mut [Complex64]) -> Result<()> {
    for (p, o) in psi.iter_mut().zip(obs) {
        let (cn, cm) = (c[o.n], c[o.m]);
        let d = cn.norm_sqr() + cm.norm_sqr() + 2.0 * eps;
        if !(d > 0.0) {
            return Err(CalError::Degenerate(format!(
                "coefficients of antennas {} and {} are both zero",
                o.n, o.m
            )));
        }
        *p = (o.b * cn.conj() + o.a * cm.conj()) / d;
    }
    Ok(())
}

/// `num_m = Σ ψ* y_{·,m}`, `den_m = Σ |ψ|²` over the partners of each `m`.
fn accumulate(obs: &[PairObs], psi: &[Complex64], num: &mut [Complex64], den: &mut [f64]) {
    num.iter_mut().for_each(|v| *v = Complex64::new(0.0, 0.0));
    den.iter_mut().for_each(|v| *v = 0.0);
    for (p, o) in psi.iter().zip(obs) {
        let pc = p.conj();
        let p2 = p.norm_sqr();
        num[o.m] += pc * o.a;
        num[o.n] += pc * o.b;
        den[o.m] += p2;
        den[o.n] += p2;
    }
}

fn check_lengths(data: &SoundingData, c: &[Complex64], psi: Option<&[Complex64]>) {
    assert_eq!(c.len(), data.len(), "coefficient vector length mismatch");
    if let Some(psi) = psi {
        assert_eq!(psi.len(), data.mask().pairs().len(), "psi length mismatch");
    }
}

/// `ψ̂` that minimises the penalized objective for fixed `c`.
pub fn psi_update(data: &SoundingData, c: &[Complex64], epsilon: f64) -> Result<Vec<Complex64>> {
    check_lengths(data, c, None);
    let obs = pair_obs(data);
    let mut psi = vec![Complex64::new(0.0, 0.0); obs.len()];
    update_psi(&obs, c, epsilon, &mut psi)?;
    Ok(psi)
}

/// `ĉ` that minimises the penalized objective for fixed `ψ`.
pub fn c_update(data: &SoundingData, psi: &[Complex64], epsilon: f64) -> Result<Vec<Complex64>> {
    check_lengths(data, &vec![Complex64::new(0.0, 0.0); data.len()], Some(psi));
    let obs = pair_obs(data);
    let mut num = vec![Complex64::new(0.0, 0.0); data.len()];
    let mut den = vec![0.0; data.len()];
    accumulate(&obs, psi, &mut num, &mut den);
    num.iter()
        .zip(&den)
        .enumerate()
        .map(|(m, (x, d))| {
            let d = epsilon + d;
            if d > 0.0 {
                Ok(x / d)
            } else {
                Err(CalError::Degenerate(format!(
                    "all equivalent channels of antenna {m} vanished"
                )))
            }
        })
        .collect()
}

/// `‖Y − Ψ C‖² + ε(‖c‖² + ‖Ψ‖²)` over measured entries; `Ψ` counts each
/// unordered pair twice, once per ordered entry.
pub fn penalized_objective(data: &SoundingData, c: &[Complex64], psi: &[Complex64], epsilon: f64) -> f64 {
    check_lengths(data, c, Some(psi));
    let mut fit = 0.0;
    let mut psi2 = 0.0;
    for (p, &(n, m)) in psi.iter().zip(data.mask().pairs()) {
        fit += (data.raw(n, m) - p * c[m]).norm_sqr() + (data.raw(m, n) - p * c[n]).norm_sqr();
        psi2 += p.norm_sqr();
    }
    fit + epsilon * (norm(c).powi(2) + 2.0 * psi2)
}

/// Norm of the conjugate gradient of the penalized objective with respect to
/// `(c, ψ)`. Zero exactly at joint stationary points.
pub fn joint_gradient_norm(data: &SoundingData, c: &[Complex64], psi: &[Complex64], epsilon: f64) -> f64 {
    check_lengths(data, c, Some(psi));
    let obs = pair_obs(data);
    let mut num = vec![Complex64::new(0.0, 0.0); c.len()];
    let mut den = vec![0.0; c.len()];
    accumulate(&obs, psi, &mut num, &mut den);
    let mut total: f64 = (0..c.len())
        .map(|m| ((epsilon + den[m]) * c[m] - num[m]).norm_sqr())
        .sum();
    for (p, o) in psi.iter().zip(&obs) {
        let (cn, cm) = (c[o.n], c[o.m]);
        let d = cn.norm_sqr() + cm.norm_sqr() + 2.0 * epsilon;
        total += (d * p - (o.b * cn.conj() + o.a * cm.conj())).norm_sqr();
    }
    total.sqrt()
}
