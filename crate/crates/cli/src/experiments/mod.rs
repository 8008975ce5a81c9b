//! Experiment drivers. Each returns typed results plus the CSV tables
//! derived from them.
//!
//! Trials run on the rayon pool; results are collected by trial index and
//! reduced sequentially, so the output never depends on scheduling.

pub mod capacity;
pub mod convergence;
pub mod crlb_map;
pub mod mse;
pub mod reduced;
pub mod wideband;

use rayon::prelude::*;
use recical_core::geometry::{draw_coupling, ArrayGeometry, ChannelMatrix, MeasurementMask};
use recical_core::{from_db, Complex64, FrontEnd, SoundingSetup};

use crate::config::{ArrayConfig, ExperimentConfig, ExperimentKind};
use crate::error::{HarnessError, Result};
use crate::seeds::SeedLedger;

/// Sub-domains for setup draws; trial streams start at `TRIALS`.
pub(crate) const COUPLING: u32 = 0;
pub(crate) const FRONTEND: u32 = 1;
pub(crate) const TRIALS: u32 = 16;

/// Runs `f(t)` for `t in 0..n` in parallel and returns the results in trial
/// order. The reported error is the one with the lowest trial index.
pub(crate) fn par_trials<T, F>(n: usize, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(usize) -> Result<T> + Sync + Send,
{
    let out: Vec<Result<T>> = (0..n).into_par_iter().map(f).collect();
    out.into_iter().collect()
}

/// What stays fixed across the trials of one experiment: array, front-end
/// and the coupling phases.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub geom: ArrayGeometry,
    pub fe: FrontEnd,
    pub hbar: ChannelMatrix,
    /// Zero-based.
    pub reference: usize,
}

impl Scenario {
    pub fn build(
        cfg: &ExperimentConfig,
        array: &ArrayConfig,
        reference: usize,
        ledger: &mut SeedLedger,
        kind: ExperimentKind,
        salt: u32,
    ) -> Result<Self> {
        let geom = array.build()?;
        if reference >= geom.len() {
            return Err(HarnessError::config(format!(
                "reference {} outside the {}-element array",
                reference + 1,
                geom.len()
            )));
        }
        let fe = cfg.frontend_for(
            geom.len(),
            reference,
            ledger,
            SeedLedger::domain(kind, FRONTEND + 2 * salt),
        )?;
        let mut rng = ledger.stream(
            "coupling phases",
            SeedLedger::domain(kind, COUPLING + 2 * salt),
            0,
        );
        let hbar = draw_coupling(&geom, &cfg.coupling, &mut rng)?;
        Ok(Scenario {
            geom,
            fe,
            hbar,
            reference,
        })
    }

    /// The configured array and reference.
    pub fn from_config(
        cfg: &ExperimentConfig,
        ledger: &mut SeedLedger,
        kind: ExperimentKind,
    ) -> Result<Self> {
        Self::build(cfg, &cfg.array, cfg.reference0(), ledger, kind, 0)
    }

    pub fn sounding(&self, cfg: &ExperimentConfig, n0_db: f64, mask: MeasurementMask) -> SoundingSetup {
        SoundingSetup {
            hbar: self.hbar.clone(),
            sigma2: cfg.coupling.sigma2,
            n0: from_db(n0_db),
            mask,
        }
    }

    pub fn full_mask(&self) -> MeasurementMask {
        MeasurementMask::full(self.geom.len())
    }

    /// True coefficients normalised to the reference.
    pub fn truth(&self) -> Vec<Complex64> {
        let c = self.fe.coefficients();
        let cref = c[self.reference];
        c.iter().map(|x| x / cref).collect()
    }
}

/// Mean of `|c_m − ĉ_m/ĉ_ref|²` over the non-reference antennas, `None` if
/// `ĉ_ref = 0`.
pub(crate) fn mean_error(c_hat: &[Complex64], truth: &[Complex64], reference: usize) -> Option<f64> {
    let cref = c_hat[reference];
    if cref.norm_sqr() == 0.0 || !cref.is_finite() {
        return None;
    }
    let sum: f64 = c_hat
        .iter()
        .zip(truth)
        .enumerate()
        .filter(|(m, _)| *m != reference)
        .map(|(_, (e, t))| (e / cref - t).norm_sqr())
        .sum();
    Some(sum / (truth.len() - 1) as f64)
}

/// Empirical quantile with linear interpolation between order statistics.
pub(crate) fn quantile(sorted: &[f64], p: f64) -> f64 {
    let pos = p * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (pos - lo as f64) * (sorted[hi] - sorted[lo])
}

pub(crate) fn median_usize(values: &mut [usize]) -> f64 {
    values.sort_unstable();
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2] as f64
    } else {
        0.5 * (values[n / 2 - 1] + values[n / 2]) as f64
    }
}
