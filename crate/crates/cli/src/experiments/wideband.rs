//! Wideband study on synthetic Laplace-kernel coefficients: eigenvalue
//! spectra across realizations, kernel-fit error reduction and Gaussianity
//! of the fit residuals.

use rand::Rng;
use recical_core::wideband::{
    ks_gaussianity, pca, per_subcarrier_estimate, synth_wideband, KernelFit, KsResult, WidebandRecord,
};
use recical_core::{to_db, Complex64};

use super::{par_trials, Scenario, TRIALS};
use crate::config::{ExperimentConfig, ExperimentKind};
use crate::error::Result;
use crate::output::{num, Table};
use crate::seeds::SeedLedger;

const KIND: ExperimentKind = ExperimentKind::Wideband;
const KERNELS: u32 = 2;
const CONTROL: u32 = 3;

#[derive(Debug, Clone)]
pub struct WidebandAntenna {
    /// One-based.
    pub antenna: usize,
    /// Leading `λ_i/λ_1` of `K_m`.
    pub spectrum: Vec<f64>,
    /// Fit of the first realization.
    pub fit: KernelFit,
    /// `mean_k |Ĉ_m[k] − C_m[k]|²`, averaged over realizations.
    pub raw_error: f64,
    /// `mean_k |Ĉ_m^WB[k] − C_m[k]|²`, averaged over realizations.
    pub fit_error: f64,
    /// KS tests on the first realization's residuals.
    pub ks_real: KsResult,
    pub ks_imag: KsResult,
    /// Uniform samples with the variance of the real residuals.
    pub ks_control: KsResult,
}

#[derive(Debug, Clone, Default)]
pub struct Wideband {
    pub n_sub: usize,
    /// Non-reference antennas only; their residuals are identically zero at
    /// the reference.
    pub antennas: Vec<WidebandAntenna>,
}

fn rate(items: &[WidebandAntenna], f: impl Fn(&WidebandAntenna) -> bool) -> f64 {
    items.iter().filter(|a| f(a)).count() as f64 / items.len() as f64
}

impl Wideband {
    /// Total per-subcarrier error power over total fit error power, dB.
    pub fn gain_db(&self) -> f64 {
        let raw: f64 = self.antennas.iter().map(|a| a.raw_error).sum();
        let fit: f64 = self.antennas.iter().map(|a| a.fit_error).sum();
        to_db(raw / fit)
    }

    pub fn ks_pass_rate_real(&self) -> f64 {
        rate(&self.antennas, |a| a.ks_real.pass)
    }

    pub fn ks_pass_rate_imag(&self) -> f64 {
        rate(&self.antennas, |a| a.ks_imag.pass)
    }

    pub fn control_fail_rate(&self) -> f64 {
        rate(&self.antennas, |a| !a.ks_control.pass)
    }

    /// Smallest `λ_1/λ_2` over antennas.
    pub fn min_eigen_ratio(&self) -> f64 {
        self.antennas
            .iter()
            .map(|a| a.spectrum.get(1).map_or(f64::INFINITY, |l2| 1.0 / l2))
            .fold(f64::INFINITY, f64::min)
    }

    pub fn tables(&self) -> Vec<Table> {
        let mut spectra = Table::new(
            "wideband_spectra.csv",
            &["antenna", "index", "eigenvalue_normalized_db"],
        );
        let mut fits = Table::new(
            "wideband_fit.csv",
            &[
                "antenna",
                "a_re_linear",
                "a_im_linear",
                "gamma_np_per_subcarrier",
                "xi_cycles_per_subcarrier",
                "raw_error_db",
                "fit_error_db",
                "gain_db",
            ],
        );
        let mut ks = Table::new("wideband_ks.csv", &["antenna", "part", "d", "critical", "pass"]);
        for a in &self.antennas {
            for (i, l) in a.spectrum.iter().enumerate() {
                spectra.push(vec![a.antenna.to_string(), (i + 1).to_string(), num(to_db(*l))]);
            }
            fits.push(vec![
                a.antenna.to_string(),
                num(a.fit.a.re),
                num(a.fit.a.im),
                num(a.fit.gamma),
                num(a.fit.xi),
                num(to_db(a.raw_error)),
                num(to_db(a.fit_error)),
                num(to_db(a.raw_error / a.fit_error)),
            ]);
            for (part, r) in [
                ("real", &a.ks_real),
                ("imag", &a.ks_imag),
                ("uniform_control", &a.ks_control),
            ] {
                ks.push(vec![
                    a.antenna.to_string(),
                    part.to_string(),
                    num(r.d),
                    num(r.critical),
                    r.pass.to_string(),
                ]);
            }
        }
        let mut summary = Table::new("wideband_summary.csv", &["metric", "value"]);
        let n = self.n_sub as f64;
        for (k, v) in [
            ("fit_gain_db", self.gain_db()),
            ("subcarriers", n),
            ("ten_log10_subcarriers_db", to_db(n)),
            ("ks_pass_rate_real", self.ks_pass_rate_real()),
            ("ks_pass_rate_imag", self.ks_pass_rate_imag()),
            ("uniform_control_fail_rate", self.control_fail_rate()),
            ("min_eigenvalue_ratio_db", to_db(self.min_eigen_ratio())),
        ] {
            summary.push(vec![k.to_string(), num(v)]);
        }
        vec![spectra, fits, ks, summary]
    }
}

fn mean_sq(a: &[Complex64], b: &[Complex64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).norm_sqr()).sum::<f64>() / a.len() as f64
}

pub fn run(cfg: &ExperimentConfig, ledger: &mut SeedLedger) -> Result<Wideband> {
    let wb = &cfg.wideband;
    let sc = Scenario::from_config(cfg, ledger, KIND)?;
    let count = sc.geom.len();
    let reference = sc.reference;
    let truths = synth_wideband(
        count,
        &wb.grid,
        &wb.ranges,
        wb.realizations,
        &mut ledger.stream("kernel parameters", SeedLedger::domain(KIND, KERNELS), 0),
    )?;
    let sounding = sc.sounding(cfg, wb.n0_db, sc.full_mask());
    let em = cfg
        .em_settings(cfg.estimator.epsilon, reference)
        .with_delta(wb.delta_ml);
    let streams = ledger.reserve(
        "per-subcarrier sounding, one stream per realization",
        SeedLedger::domain(KIND, TRIALS),
        wb.realizations,
    );
    let estimates = par_trials(wb.realizations, |r| {
        Ok(per_subcarrier_estimate(
            &truths[r],
            &sounding,
            &em,
            reference,
            &mut streams.get(r),
        )?)
    })?;
    let spectra = pca(&estimates)?;
    let records = estimates
        .into_iter()
        .map(WidebandRecord::from_estimates)
        .collect::<recical_core::Result<Vec<_>>>()?;

    let mut control_rng = ledger.stream("uniform control samples", SeedLedger::domain(KIND, CONTROL), 0);
    let mut antennas = Vec::with_capacity(count - 1);
    for m in (0..count).filter(|&m| m != reference) {
        let (mut raw, mut fit) = (0.0, 0.0);
        for (rec, truth) in records.iter().zip(&truths) {
            let c = truth.normalized_row(m, reference);
            raw += mean_sq(&rec.c_hat[m], &c);
            fit += mean_sq(&rec.fits[m].fitted, &c);
        }
        let resid = &records[0].residuals[m];
        let re: Vec<f64> = resid.iter().map(|e| e.re).collect();
        let im: Vec<f64> = resid.iter().map(|e| e.im).collect();
        let sd = (re.iter().map(|x| x * x).sum::<f64>() / re.len() as f64).sqrt();
        let half = 3f64.sqrt() * sd;
        let uniform: Vec<f64> = (0..re.len())
            .map(|_| control_rng.random_range(-half..half))
            .collect();
        let spectrum = spectra[m]
            .normalized()
            .into_iter()
            .take(wb.spectrum_len)
            .collect();
        antennas.push(WidebandAntenna {
            antenna: m + 1,
            spectrum,
            fit: records[0].fits[m].clone(),
            raw_error: raw / records.len() as f64,
            fit_error: fit / records.len() as f64,
            ks_real: ks_gaussianity(&re, wb.ks_alpha)?,
            ks_imag: ks_gaussianity(&im, wb.ks_alpha)?,
            ks_control: ks_gaussianity(&uniform, wb.ks_alpha)?,
        });
    }
    Ok(Wideband {
        n_sub: wb.grid.n_sub,
        antennas,
    })
}
