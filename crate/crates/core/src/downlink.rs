//! Downlink precoding with calibrated uplink channel estimates.
//!
//! Uplink `H_UP = R_B H_P T_U` (M×K), downlink `H_DL = R_U H_P^T T_B` (K×M).
//! With calibration coefficients `ĉ` the base station uses
//! `G = (diag(ĉ) H_UP)^T` in place of `H_DL`.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;

use crate::error::{CalError, Result};
use crate::estimators::{em_calibrate, gmm_estimate, Constraint, EmSettings};
use crate::frontend::FrontEnd;
use crate::random::complex_normal;
use crate::sounding::SoundingSetup;

pub type CMatrix = DMatrix<Complex64>;

/// `G = (diag(ĉ) H_UP)^T`.
pub fn calibrated_downlink(h_up: &CMatrix, c_hat: &[Complex64]) -> Result<CMatrix> {
    if h_up.nrows() != c_hat.len() {
        return Err(CalError::invalid(format!(
            "uplink channel has {} rows but {} coefficients were given",
            h_up.nrows(),
            c_hat.len()
        )));
    }
    Ok(CMatrix::from_fn(h_up.ncols(), h_up.nrows(), |k, m| {
        c_hat[m] * h_up[(m, k)]
    }))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Precoder {
    Zf,
    Mrt,
}

impl Precoder {
    pub fn name(self) -> &'static str {
        match self {
            Precoder::Zf => "zf",
            Precoder::Mrt => "mrt",
        }
    }

    pub fn build(self, g: &CMatrix) -> Result<CMatrix> {
        match self {
            Precoder::Zf => zf_precoder(g),
            Precoder::Mrt => mrt_precoder(g),
        }
    }
}

/// Scales every column to unit norm, so `‖P‖_F² = K` and each user gets
/// the same transmit energy.
fn normalize_columns(mut p: CMatrix) -> Result<CMatrix> {
    for mut col in p.column_iter_mut() {
        let n = col.norm();
        if !(n > 0.0) || !n.is_finite() {
            return Err(CalError::Numerical(
                "precoder has a zero or non-finite column".into(),
            ));
        }
        col /= Complex64::from(n);
    }
    Ok(p)
}

/// Right pseudo-inverse `G^H (G G^H)^{-1}` with unit-norm columns.
pub fn zf_precoder(g: &CMatrix) -> Result<CMatrix> {
    if g.nrows() > g.ncols() {
        return Err(CalError::invalid(format!(
            "zero forcing needs K <= M, got K = {} and M = {}",
            g.nrows(),
            g.ncols()
        )));
    }
    let gh = g.adjoint();
    let gram = g * &gh;
    let rank_deficient = || CalError::Numerical("G does not have full row rank".into());
    let chol = gram.cholesky().ok_or_else(rank_deficient)?;
    let diag = chol.l_dirty().diagonal();
    let (lo, hi) = diag.iter().fold((f64::INFINITY, 0.0f64), |(lo, hi), d| {
        (lo.min(d.re), hi.max(d.re))
    });
    // squared ratio bounds the Gram condition number from below
    if !(lo > hi * 1e-7) {
        return Err(rank_deficient());
    }
    let p = gh * chol.inverse();
    normalize_columns(p)
}

/// `G^H` with unit-norm columns.
pub fn mrt_precoder(g: &CMatrix) -> Result<CMatrix> {
    normalize_columns(g.adjoint())
}

/// `Σ_k log2(1 + SINR_k)` treating inter-user interference as noise.
pub fn sum_rate(h_dl: &CMatrix, p: &CMatrix, n_w: f64) -> f64 {
    let e = h_dl * p;
    (0..e.nrows())
        .map(|k| {
            let signal = e[(k, k)].norm_sqr();
            let interference: f64 = (0..e.ncols())
                .filter(|&j| j != k)
                .map(|j| e[(k, j)].norm_sqr())
                .sum();
            (1.0 + signal / (interference + n_w)).log2()
        })
        .sum()
}

/// Mean of `|r − s|² / |s|²`.
pub fn evm(received: &[Complex64], sent: &[Complex64]) -> Result<f64> {
    if received.len() != sent.len() || sent.is_empty() {
        return Err(CalError::invalid(
            "received and sent symbol counts differ or are zero",
        ));
    }
    let mut acc = 0.0;
    for (r, s) in received.iter().zip(sent) {
        let p = s.norm_sqr();
        if !(p > 0.0) {
            return Err(CalError::invalid("zero transmitted symbol"));
        }
        acc += (r - s).norm_sqr() / p;
    }
    Ok(acc / sent.len() as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Variant {
    Uncalibrated,
    Gmm,
    Em,
    Perfect,
    TrueDownlink,
}

impl Variant {
    pub const ALL: [Variant; 5] = [
        Variant::Uncalibrated,
        Variant::Gmm,
        Variant::Em,
        Variant::Perfect,
        Variant::TrueDownlink,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Variant::Uncalibrated => "uncalibrated",
            Variant::Gmm => "gmm",
            Variant::Em => "em",
            Variant::Perfect => "perfect",
            Variant::TrueDownlink => "true_downlink",
        }
    }
}

/// Everything fixed across the trials of one capacity experiment.
#[derive(Debug, Clone)]
pub struct DownlinkScenario {
    pub users: usize,
    /// Downlink noise variance `N_w`.
    pub n_w: f64,
    /// Base-station front-end. Users reuse the gains of the first `K`
    /// base-station chains.
    pub fe: FrontEnd,
    pub sounding: SoundingSetup,
    pub em: EmSettings,
}

impl DownlinkScenario {
    pub fn validate(&self) -> Result<()> {
        let m = self.fe.len();
        if self.users == 0 || self.users > m {
            return Err(CalError::invalid(format!(
                "user count must lie in 1..={m}, got {}",
                self.users
            )));
        }
        if !(self.n_w > 0.0) {
            return Err(CalError::invalid("downlink noise variance must be > 0"));
        }
        Ok(())
    }
}

/// Sum rates of one trial for each requested variant and precoder, in the
/// order given.
#[derive(Debug, Clone, PartialEq)]
pub struct CapacityTrial {
    pub rates: Vec<(Variant, Precoder, f64)>,
}

/// One Monte-Carlo trial: radio channel, sounding, estimation, precoding.
pub fn capacity_trial<R: Rng + ?Sized>(
    scenario: &DownlinkScenario,
    variants: &[Variant],
    precoders: &[Precoder],
    rng: &mut R,
) -> Result<CapacityTrial> {
    scenario.validate()?;
    let fe = &scenario.fe;
    let (m, k) = (fe.len(), scenario.users);
    let h_p = CMatrix::from_fn(m, k, |_, _| complex_normal(rng, 1.0));
    let h_up = CMatrix::from_fn(m, k, |i, u| fe.r[i] * h_p[(i, u)] * fe.t[u]);
    let h_dl = CMatrix::from_fn(k, m, |u, i| fe.r[u] * h_p[(i, u)] * fe.t[i]);

    let needs_sounding = variants.iter().any(|v| matches!(v, Variant::Gmm | Variant::Em));
    let data = if needs_sounding {
        Some(scenario.sounding.draw(fe, rng)?)
    } else {
        None
    };

    let mut rates = Vec::with_capacity(variants.len() * precoders.len());
    for &variant in variants {
        let g = match variant {
            Variant::Uncalibrated => calibrated_downlink(&h_up, &vec![Complex64::new(1.0, 0.0); m])?,
            Variant::Perfect => calibrated_downlink(&h_up, &fe.coefficients())?,
            Variant::TrueDownlink => h_dl.clone(),
            Variant::Gmm => {
                let e = gmm_estimate(
                    data.as_ref().expect("sounding drawn"),
                    Constraint::RefOne {
                        reference: fe.reference,
                    },
                )?;
                calibrated_downlink(&h_up, &e.c_hat)?
            }
            Variant::Em => {
                let e = em_calibrate(data.as_ref().expect("sounding drawn"), &scenario.em)?;
                calibrated_downlink(&h_up, &e.c_hat)?
            }
        };
        for &precoder in precoders {
            let p = precoder.build(&g)?;
            rates.push((variant, precoder, sum_rate(&h_dl, &p, scenario.n_w)));
        }
    }
    Ok(CapacityTrial { rates })
}

/// Sequential driver; `rng_for(trial)` supplies each trial's stream.
pub fn capacity_experiment<R: Rng>(
    scenario: &DownlinkScenario,
    variants: &[Variant],
    precoders: &[Precoder],
    trials: usize,
    mut rng_for: impl FnMut(usize) -> R,
) -> Result<Vec<CapacityTrial>> {
    (0..trials)
        .map(|t| capacity_trial(scenario, variants, precoders, &mut rng_for(t)))
        .collect()
}
