//! Calibration-coefficient estimators and their scoring.

mod em;
mod gmm;
mod linear;

use num_complex::Complex64;

use crate::error::{CalError, Result};

pub use em::{
    c_update, em_calibrate, em_solve, joint_gradient_norm, penalized_objective, psi_update, EmIteration,
    EmSolution,
};
pub use gmm::{gmm_cost, gmm_cost_matrix, gmm_estimate};
pub use linear::linear_array_ml;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    Gmm,
    Em,
    LinearMl,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::Gmm => "gmm",
            Method::Em => "em",
            Method::LinearMl => "linear_ml",
        }
    }
}

/// Normalisation resolving the common complex scalar.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Constraint {
    /// `ĉ_ref = 1`.
    RefOne { reference: usize },
    /// `‖ĉ‖ = 1`, phase rotated so that `ĉ_ref` is real and positive.
    UnitNorm { reference: usize },
    /// No normalisation (EM output).
    None,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CalibrationEstimate {
    pub c_hat: Vec<Complex64>,
    pub method: Method,
    pub constraint: Constraint,
    /// EM iterations performed; zero for closed-form methods.
    pub iterations: usize,
    pub epsilon: f64,
    pub converged: bool,
}

impl CalibrationEstimate {
    /// `ĉ / ĉ_ref`, or `None` when `ĉ_ref = 0`.
    pub fn normalized(&self, reference: usize) -> Option<Vec<Complex64>> {
        normalize_to(&self.c_hat, reference)
    }
}

pub(crate) fn normalize_to(c: &[Complex64], reference: usize) -> Option<Vec<Complex64>> {
    let cref = c[reference];
    if cref.norm_sqr() == 0.0 || !cref.is_finite() {
        return None;
    }
    Some(c.iter().map(|x| x / cref).collect())
}

/// EM starting point.
#[derive(Debug, Clone, PartialEq)]
pub enum EmInit {
    /// GMM estimate with `ĉ_ref = 1`.
    Gmm { reference: usize },
    /// Unit-magnitude coefficients with i.i.d. uniform phases.
    Random { seed: u64 },
    /// Caller-supplied vector, e.g. the true coefficients.
    Explicit(Vec<Complex64>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct EmSettings {
    /// Ridge penalty `ε ≥ 0` on both parameter blocks.
    pub epsilon: f64,
    /// Stop once `‖ĉ_new − ĉ_old‖² < delta_ml`.
    pub delta_ml: f64,
    /// `None` means `50·M`.
    pub max_iter: Option<usize>,
    pub init: EmInit,
}

impl EmSettings {
    pub fn new(epsilon: f64, reference: usize) -> Self {
        EmSettings {
            epsilon,
            delta_ml: 1e-6,
            max_iter: None,
            init: EmInit::Gmm { reference },
        }
    }

    pub fn with_init(mut self, init: EmInit) -> Self {
        self.init = init;
        self
    }

    pub fn with_delta(mut self, delta_ml: f64) -> Self {
        self.delta_ml = delta_ml;
        self
    }

    pub fn with_max_iter(mut self, max_iter: usize) -> Self {
        self.max_iter = Some(max_iter);
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon >= 0.0 && self.epsilon.is_finite()) {
            return Err(CalError::invalid(format!(
                "epsilon must be >= 0, got {}",
                self.epsilon
            )));
        }
        if !(self.delta_ml > 0.0) {
            return Err(CalError::invalid(format!(
                "delta_ml must be > 0, got {}",
                self.delta_ml
            )));
        }
        if self.max_iter == Some(0) {
            return Err(CalError::invalid("max_iter must be >= 1"));
        }
        Ok(())
    }
}

/// Per-antenna MSE `E|c_m − ĉ_m/ĉ_ref|²`.
#[derive(Debug, Clone, PartialEq)]
pub struct MseReport {
    pub per_antenna: Vec<f64>,
    pub trials: usize,
    /// Trials dropped because `ĉ_ref = 0`.
    pub excluded: usize,
}

/// Streaming form of [`score_mse`].
#[derive(Debug, Clone)]
pub struct MseAccumulator {
    truth: Vec<Complex64>,
    reference: usize,
    sum: Vec<f64>,
    trials: usize,
    excluded: usize,
}

impl MseAccumulator {
    /// `truth` is normalised to its own reference entry first.
    pub fn new(truth: &[Complex64], reference: usize) -> Result<Self> {
        if reference >= truth.len() {
            return Err(CalError::IndexOutOfRange {
                index: reference,
                count: truth.len(),
            });
        }
        let truth = normalize_to(truth, reference)
            .ok_or_else(|| CalError::invalid("true reference coefficient is zero"))?;
        Ok(MseAccumulator {
            sum: vec![0.0; truth.len()],
            truth,
            reference,
            trials: 0,
            excluded: 0,
        })
    }

    /// Adds one trial; returns `false` if it had to be excluded.
    pub fn add(&mut self, c_hat: &[Complex64]) -> bool {
        assert_eq!(c_hat.len(), self.truth.len(), "estimate length mismatch");
        match normalize_to(c_hat, self.reference) {
            Some(c) => {
                for ((s, t), e) in self.sum.iter_mut().zip(&self.truth).zip(&c) {
                    *s += (t - e).norm_sqr();
                }
                self.trials += 1;
                true
            }
            None => {
                self.excluded += 1;
                false
            }
        }
    }

    pub fn merge(&mut self, other: &MseAccumulator) {
        for (a, b) in self.sum.iter_mut().zip(&other.sum) {
            *a += b;
        }
        self.trials += other.trials;
        self.excluded += other.excluded;
    }

    pub fn finish(&self) -> Result<MseReport> {
        if self.trials == 0 {
            return Err(CalError::invalid(format!(
                "no usable trials ({} excluded)",
                self.excluded
            )));
        }
        Ok(MseReport {
            per_antenna: self.sum.iter().map(|s| s / self.trials as f64).collect(),
            trials: self.trials,
            excluded: self.excluded,
        })
    }
}

/// Averages `|c_m − ĉ_m/ĉ_ref|²` over trials. The re-normalisation is applied
/// to every estimate, whatever its own constraint.
pub fn score_mse(
    estimates: &[CalibrationEstimate],
    c_true: &[Complex64],
    reference: usize,
) -> Result<MseReport> {
    if estimates.is_empty() {
        return Err(CalError::invalid("no estimates to score"));
    }
    let mut acc = MseAccumulator::new(c_true, reference)?;
    for e in estimates {
        acc.add(&e.c_hat);
    }
    acc.finish()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn est(c: Vec<Complex64>) -> CalibrationEstimate {
        CalibrationEstimate {
            c_hat: c,
            method: Method::Em,
            constraint: Constraint::None,
            iterations: 0,
            epsilon: 0.0,
            converged: true,
        }
    }

    fn truth() -> Vec<Complex64> {
        vec![
            Complex64::new(0.9, 0.2),
            Complex64::new(1.0, 0.0),
            Complex64::new(1.1, -0.3),
        ]
    }

    #[test]
    fn exact_and_scaled_estimates_score_zero() {
        let c = truth();
        let r = score_mse(&[est(c.clone())], &c, 1).unwrap();
        assert!(r.per_antenna.iter().all(|v| *v == 0.0));

        let alpha = Complex64::new(-2.0, 0.5);
        let scaled: Vec<_> = c.iter().map(|x| alpha * x).collect();
        let r = score_mse(&[est(scaled)], &c, 1).unwrap();
        assert!(r.per_antenna.iter().all(|v| *v < 1e-30));
    }

    #[test]
    fn single_perturbation() {
        let c = truth();
        let delta = Complex64::new(0.01, -0.02);
        let mut e = c.clone();
        e[2] += delta;
        let r = score_mse(&[est(e)], &c, 1).unwrap();
        assert!((r.per_antenna[2] - delta.norm_sqr()).abs() < 1e-16);
        assert_eq!(r.per_antenna[0], 0.0);
    }

    #[test]
    fn zero_reference_trials_are_excluded() {
        let c = truth();
        let mut bad = c.clone();
        bad[1] = Complex64::new(0.0, 0.0);
        let r = score_mse(&[est(bad.clone()), est(c.clone())], &c, 1).unwrap();
        assert_eq!((r.trials, r.excluded), (1, 1));
        assert!(score_mse(&[est(bad)], &c, 1).is_err());
        assert!(score_mse(&[], &c, 1).is_err());
    }
}
