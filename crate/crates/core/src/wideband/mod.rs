//! Calibration coefficients across OFDM subcarriers.
//!
//! The truth follows a Laplace kernel per antenna,
//! `C_m[k] = A_m exp((γ_m + j2πξ_m) k) exp(j2πζ_m)`, with `ζ_m` redrawn per
//! realization. Narrowband estimates are produced independently on every
//! subcarrier and then smoothed by fitting the kernel.

mod fit;
mod ks;
mod pca;

use std::f64::consts::TAU;

use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{CalError, Result};
use crate::estimators::{em_calibrate, EmSettings};
use crate::frontend::FrontEnd;
use crate::sounding::SoundingSetup;

pub use fit::{wideband_fit, KernelFit};
pub use ks::{ks_critical_value, ks_gaussianity, KsResult};
pub use pca::{pca, PcaResult};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct OfdmGrid {
    /// Carrier frequency in Hz.
    pub f_c: f64,
    /// Sample rate in samples per second.
    pub f_s: f64,
    pub n_fft: usize,
    /// Used subcarriers.
    pub n_sub: usize,
}

impl Default for OfdmGrid {
    fn default() -> Self {
        OfdmGrid {
            f_c: 3.7e9,
            f_s: 7.68e6,
            n_fft: 2048,
            n_sub: 1200,
        }
    }
}

impl OfdmGrid {
    pub fn validate(&self) -> Result<()> {
        if self.n_sub == 0 || self.n_sub > self.n_fft {
            return Err(CalError::invalid(format!(
                "used subcarriers must lie in 1..={}, got {}",
                self.n_fft, self.n_sub
            )));
        }
        Ok(())
    }

    pub fn subcarrier_spacing(&self) -> f64 {
        self.f_s / self.n_fft as f64
    }
}

/// Ranges of the per-antenna kernel parameters drawn by [`synth_wideband`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct KernelRanges {
    /// `|A| ~ U[a_min, a_max]`, phase uniform.
    pub a_min: f64,
    pub a_max: f64,
    /// `γ ~ U[−gamma_max, gamma_max]`.
    pub gamma_max: f64,
    /// `ξ ~ U[−xi_max, xi_max]`, cycles per subcarrier.
    pub xi_max: f64,
}

impl Default for KernelRanges {
    fn default() -> Self {
        KernelRanges {
            a_min: 0.9,
            a_max: 1.1,
            gamma_max: 5e-5,
            xi_max: 1e-4,
        }
    }
}

impl KernelRanges {
    pub fn validate(&self, n_sub: usize) -> Result<()> {
        if !(0.0 < self.a_min && self.a_min <= self.a_max) {
            return Err(CalError::invalid("need 0 < a_min <= a_max"));
        }
        if !(self.gamma_max >= 0.0 && self.xi_max >= 0.0 && self.xi_max < 0.5) {
            return Err(CalError::invalid("need gamma_max >= 0 and 0 <= xi_max < 1/2"));
        }
        // keep the magnitude ratio across the band at most 10
        if self.gamma_max * n_sub.saturating_sub(1) as f64 > 10f64.ln() {
            return Err(CalError::invalid(format!(
                "gamma_max {} lets |C| vary by more than 10x over {n_sub} subcarriers",
                self.gamma_max
            )));
        }
        Ok(())
    }
}

/// One realization of the wideband calibration coefficients.
#[derive(Debug, Clone, PartialEq)]
pub struct WidebandTruth {
    pub a: Vec<Complex64>,
    pub gamma: Vec<f64>,
    pub xi: Vec<f64>,
    /// Random phase offset in cycles.
    pub zeta: Vec<f64>,
    pub n_sub: usize,
}

impl WidebandTruth {
    pub fn len(&self) -> usize {
        self.a.len()
    }

    pub fn is_empty(&self) -> bool {
        self.a.is_empty()
    }

    pub fn value(&self, m: usize, k: usize) -> Complex64 {
        self.a[m]
            * Complex64::new(
                self.gamma[m] * k as f64,
                TAU * (self.xi[m] * k as f64 + self.zeta[m]),
            )
            .exp()
    }

    pub fn row(&self, m: usize) -> Vec<Complex64> {
        (0..self.n_sub).map(|k| self.value(m, k)).collect()
    }

    /// `C_m[k] / C_ref[k]`, the quantity a reference-normalised estimator
    /// targets.
    pub fn normalized_row(&self, m: usize, reference: usize) -> Vec<Complex64> {
        (0..self.n_sub)
            .map(|k| self.value(m, k) / self.value(reference, k))
            .collect()
    }
}

/// Draws kernel parameters once and `realizations` independent sets of
/// phase offsets `ζ_m ~ U[0, 1)`.
pub fn synth_wideband<R: Rng + ?Sized>(
    count: usize,
    grid: &OfdmGrid,
    ranges: &KernelRanges,
    realizations: usize,
    rng: &mut R,
) -> Result<Vec<WidebandTruth>> {
    grid.validate()?;
    ranges.validate(grid.n_sub)?;
    if realizations == 0 || count == 0 {
        return Err(CalError::invalid("need at least one antenna and one realization"));
    }
    let mut uniform = |lo: f64, hi: f64| lo + (hi - lo) * rng.random::<f64>();
    let a: Vec<Complex64> = (0..count)
        .map(|_| {
            let mag = uniform(ranges.a_min, ranges.a_max);
            Complex64::from_polar(mag, uniform(0.0, TAU))
        })
        .collect();
    let gamma: Vec<f64> = (0..count)
        .map(|_| uniform(-ranges.gamma_max, ranges.gamma_max))
        .collect();
    let xi: Vec<f64> = (0..count)
        .map(|_| uniform(-ranges.xi_max, ranges.xi_max))
        .collect();
    Ok((0..realizations)
        .map(|_| WidebandTruth {
            a: a.clone(),
            gamma: gamma.clone(),
            xi: xi.clone(),
            zeta: (0..count).map(|_| rng.random::<f64>()).collect(),
            n_sub: grid.n_sub,
        })
        .collect())
}

/// Narrowband EM estimates on every subcarrier, normalised to `reference`.
///
/// Subcarrier `k` uses front-end `r_m = 1`, `t_m = C_m[k]`; the diffuse
/// channel term and the noise are redrawn per subcarrier. Returns `M` rows
/// of length `N_SUB`.
pub fn per_subcarrier_estimate<R: Rng + ?Sized>(
    truth: &WidebandTruth,
    sounding: &SoundingSetup,
    em: &EmSettings,
    reference: usize,
    rng: &mut R,
) -> Result<Vec<Vec<Complex64>>> {
    let count = truth.len();
    if reference >= count {
        return Err(CalError::IndexOutOfRange {
            index: reference,
            count,
        });
    }
    let mut rows = vec![Vec::with_capacity(truth.n_sub); count];
    let ones = vec![Complex64::new(1.0, 0.0); count];
    for k in 0..truth.n_sub {
        let t: Vec<Complex64> = (0..count).map(|m| truth.value(m, k)).collect();
        let fe = FrontEnd::new(t, ones.clone(), reference)?;
        let data = sounding.draw(&fe, rng)?;
        let est = em_calibrate(&data, em)?;
        let c = est.normalized(reference).ok_or_else(|| {
            CalError::Degenerate(format!("reference coefficient vanished on subcarrier {k}"))
        })?;
        for (row, v) in rows.iter_mut().zip(c) {
            row.push(v);
        }
    }
    Ok(rows)
}

/// Per-subcarrier estimates together with their kernel fits.
#[derive(Debug, Clone)]
pub struct WidebandRecord {
    pub c_hat: Vec<Vec<Complex64>>,
    pub fits: Vec<KernelFit>,
    /// `Ê_m[k] = Ĉ_m[k] − Ĉ_m[k]^WB`.
    pub residuals: Vec<Vec<Complex64>>,
}

impl WidebandRecord {
    pub fn from_estimates(c_hat: Vec<Vec<Complex64>>) -> Result<Self> {
        let fits = c_hat
            .iter()
            .map(|row| wideband_fit(row))
            .collect::<Result<Vec<_>>>()?;
        let residuals = c_hat
            .iter()
            .zip(&fits)
            .map(|(row, f)| row.iter().zip(&f.fitted).map(|(a, b)| a - b).collect())
            .collect();
        Ok(WidebandRecord {
            c_hat,
            fits,
            residuals,
        })
    }
}
