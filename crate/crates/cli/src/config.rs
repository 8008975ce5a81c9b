//! JSON experiment configuration.
//!
//! Every field has a default, so `{}` is a valid file and reproduces the
//! 4×25 reference setup. Antenna numbers in the file and in the CSV output
//! are one-based (`m = cols·(row−1) + col`); the library is zero-based.

use std::path::{Path, PathBuf};

use clap::ValueEnum;
use recical_core::geometry::{build_geometry, ArrayGeometry, CouplingModel};
use recical_core::wideband::{KernelRanges, OfdmGrid};
use recical_core::{deterministic_frontend, random_frontend, EmSettings, FrontEnd};
use serde::{Deserialize, Serialize};

use crate::error::{HarnessError, Result};
use crate::seeds::SeedLedger;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    MseSweep,
    Convergence,
    Capacity,
    Wideband,
    CrlbMap,
    ReducedSet,
}

impl ExperimentKind {
    pub const ALL: [ExperimentKind; 6] = [
        ExperimentKind::MseSweep,
        ExperimentKind::Convergence,
        ExperimentKind::Capacity,
        ExperimentKind::Wideband,
        ExperimentKind::CrlbMap,
        ExperimentKind::ReducedSet,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ExperimentKind::MseSweep => "mse-sweep",
            ExperimentKind::Convergence => "convergence",
            ExperimentKind::Capacity => "capacity",
            ExperimentKind::Wideband => "wideband",
            ExperimentKind::CrlbMap => "crlb-map",
            ExperimentKind::ReducedSet => "reduced-set",
        }
    }

    /// Top bits of every seed domain used by the experiment.
    pub(crate) fn id(self) -> u64 {
        match self {
            ExperimentKind::MseSweep => 1,
            ExperimentKind::Convergence => 2,
            ExperimentKind::Capacity => 3,
            ExperimentKind::Wideband => 4,
            ExperimentKind::CrlbMap => 5,
            ExperimentKind::ReducedSet => 6,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ArrayConfig {
    pub rows: usize,
    pub cols: usize,
    /// Wavelengths.
    pub spacing: f64,
}

impl Default for ArrayConfig {
    fn default() -> Self {
        ArrayConfig {
            rows: 4,
            cols: 25,
            spacing: 0.5,
        }
    }
}

impl ArrayConfig {
    pub fn build(&self) -> Result<ArrayGeometry> {
        Ok(build_geometry(self.rows, self.cols, self.spacing)?)
    }

    pub fn count(&self) -> usize {
        self.rows * self.cols
    }

    /// One-based index of the most central element.
    pub fn central_antenna(&self) -> usize {
        self.cols * ((self.rows - 1) / 2) + (self.cols - 1) / 2 + 1
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum FrontEndConfig {
    /// Smooth deterministic gains with about 10 % magnitude spread.
    #[default]
    Deterministic,
    /// Independent `(1 + U[−spread, spread])·e^{jU[0,2π)}` gains, drawn once
    /// per experiment.
    Random { spread: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EstimatorConfig {
    /// Ridge penalty of the EM runs in the MSE, capacity and wideband
    /// experiments.
    pub epsilon: f64,
    pub delta_ml: f64,
    /// `null` means `50·M`.
    pub max_iter: Option<usize>,
}

impl Default for EstimatorConfig {
    fn default() -> Self {
        EstimatorConfig {
            epsilon: 0.0,
            delta_ml: 1e-6,
            max_iter: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MseSweepConfig {
    /// One-based antennas reported in the CSV.
    pub antennas: Vec<usize>,
    /// Neighbourhood radius of the reduced-mask bound, wavelengths.
    pub reduced_radius: f64,
}

impl Default for MseSweepConfig {
    fn default() -> Self {
        MseSweepConfig {
            antennas: vec![1, 37, 39],
            reduced_radius: std::f64::consts::FRAC_1_SQRT_2,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ConvergenceConfig {
    pub n0_db: f64,
    pub epsilons: Vec<f64>,
    /// Length of the logged MSE trace; converged runs are held at their
    /// final value.
    pub logged_iterations: usize,
    /// Arrays `[rows, cols]` for the random-initialisation scaling study.
    pub random_init_arrays: Vec<[usize; 2]>,
    pub random_init_epsilon: f64,
    /// `null` uses the top-level trial count.
    pub random_init_trials: Option<usize>,
}

impl Default for ConvergenceConfig {
    fn default() -> Self {
        ConvergenceConfig {
            n0_db: -40.0,
            epsilons: vec![0.0, 0.01, 0.1],
            logged_iterations: 40,
            random_init_arrays: vec![[4, 5], [5, 10], [4, 25]],
            random_init_epsilon: 0.1,
            random_init_trials: Some(100),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CapacityConfig {
    pub n0_db: f64,
    pub users: usize,
    /// Downlink noise variance, linear.
    pub n_w: f64,
}

impl Default for CapacityConfig {
    fn default() -> Self {
        CapacityConfig {
            n0_db: -40.0,
            users: 10,
            n_w: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WidebandConfig {
    pub n0_db: f64,
    /// Independent phase-offset realizations; the PCA needs at least 2.
    pub realizations: usize,
    pub grid: OfdmGrid,
    pub ranges: KernelRanges,
    pub ks_alpha: f64,
    /// Number of leading normalised eigenvalues written per antenna.
    pub spectrum_len: usize,
    /// EM stopping threshold for the per-subcarrier estimates. Much tighter
    /// than the narrowband default: an estimate stopped early keeps the
    /// shrinkage of its GMM start, which is smooth across subcarriers and
    /// survives the kernel fit.
    pub delta_ml: f64,
}

impl Default for WidebandConfig {
    fn default() -> Self {
        WidebandConfig {
            n0_db: -80.0,
            realizations: 10,
            grid: OfdmGrid::default(),
            ranges: KernelRanges::default(),
            ks_alpha: 0.05,
            spectrum_len: 10,
            delta_ml: 1e-14,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub array: ArrayConfig,
    /// One-based reference antenna.
    pub reference: usize,
    pub coupling: CouplingModel,
    /// Sounding noise grid in dB for the sweep experiments.
    pub n0_db: Vec<f64>,
    pub frontend: FrontEndConfig,
    pub estimator: EstimatorConfig,
    pub trials: usize,
    pub seed: u64,
    pub out_dir: PathBuf,
    pub mse_sweep: MseSweepConfig,
    pub convergence: ConvergenceConfig,
    pub capacity: CapacityConfig,
    pub wideband: WidebandConfig,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            array: ArrayConfig::default(),
            reference: 38,
            coupling: CouplingModel::default(),
            n0_db: (0..=12).map(|i| -90.0 + 5.0 * i as f64).collect(),
            frontend: FrontEndConfig::default(),
            estimator: EstimatorConfig::default(),
            trials: 1000,
            seed: 1,
            out_dir: PathBuf::from("out"),
            mse_sweep: MseSweepConfig::default(),
            convergence: ConvergenceConfig::default(),
            capacity: CapacityConfig::default(),
            wideband: WidebandConfig::default(),
        }
    }
}

fn check(ok: bool, msg: impl FnOnce() -> String) -> Result<()> {
    if ok {
        Ok(())
    } else {
        Err(HarnessError::Config(msg()))
    }
}

fn check_antenna(what: &str, m: usize, count: usize) -> Result<()> {
    check((1..=count).contains(&m), || {
        format!("{what} antenna {m} outside 1..={count}")
    })
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| HarnessError::io(path, e))?;
        let cfg: ExperimentConfig = serde_json::from_str(&text)?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let count = self.array.count();
        check(count >= 2, || "the array needs at least two antennas".into())?;
        self.array.build()?;
        check_antenna("reference", self.reference, count)?;
        self.coupling.validate()?;
        check(self.trials >= 1, || "trials must be >= 1".into())?;
        check(!self.n0_db.is_empty(), || "the N0 grid is empty".into())?;
        check(self.n0_db.iter().all(|x| x.is_finite()), || {
            "N0 grid values must be finite".into()
        })?;
        if let FrontEndConfig::Random { spread } = self.frontend {
            check((0.0..1.0).contains(&spread), || {
                format!("front-end spread must lie in [0, 1), got {spread}")
            })?;
        }
        self.em_settings(self.estimator.epsilon, 0).validate()?;

        for &m in &self.mse_sweep.antennas {
            check_antenna("reported", m, count)?;
        }
        check(self.mse_sweep.reduced_radius > 0.0, || {
            "reduced radius must be > 0".into()
        })?;

        let conv = &self.convergence;
        check(conv.n0_db.is_finite(), || "convergence N0 must be finite".into())?;
        check(!conv.epsilons.is_empty(), || {
            "convergence epsilon list is empty".into()
        })?;
        for &eps in conv.epsilons.iter().chain([&conv.random_init_epsilon]) {
            check(eps >= 0.0 && eps.is_finite(), || {
                format!("epsilon must be >= 0, got {eps}")
            })?;
        }
        check(conv.random_init_trials != Some(0), || {
            "random-init trials must be >= 1".into()
        })?;
        for &[rows, cols] in &conv.random_init_arrays {
            check(rows * cols >= 2, || format!("array {rows}x{cols} is too small"))?;
        }

        let cap = &self.capacity;
        check(cap.users >= 1 && cap.users <= count, || {
            format!("user count must lie in 1..={count}, got {}", cap.users)
        })?;
        check(cap.n_w > 0.0, || "downlink noise variance must be > 0".into())?;

        let wb = &self.wideband;
        check(wb.realizations >= 2, || {
            "wideband needs at least 2 realizations".into()
        })?;
        check(wb.ks_alpha > 0.0 && wb.ks_alpha < 1.0, || {
            "ks_alpha must lie in (0, 1)".into()
        })?;
        check(wb.spectrum_len >= 1, || "spectrum_len must be >= 1".into())?;
        check(wb.delta_ml > 0.0 && wb.delta_ml.is_finite(), || {
            format!("wideband delta_ml must be positive, got {}", wb.delta_ml)
        })?;
        wb.grid.validate()?;
        wb.ranges.validate(wb.grid.n_sub)?;
        Ok(())
    }

    /// Zero-based reference.
    pub fn reference0(&self) -> usize {
        self.reference - 1
    }

    pub fn em_settings(&self, epsilon: f64, reference0: usize) -> EmSettings {
        let mut s = EmSettings::new(epsilon, reference0).with_delta(self.estimator.delta_ml);
        s.max_iter = self.estimator.max_iter;
        s
    }

    /// Front-end for an array of `count` antennas. The random kind draws
    /// from a dedicated stream recorded in `ledger`.
    pub fn frontend_for(
        &self,
        count: usize,
        reference0: usize,
        ledger: &mut SeedLedger,
        domain: u64,
    ) -> Result<FrontEnd> {
        Ok(match self.frontend {
            FrontEndConfig::Deterministic => deterministic_frontend(count, reference0)?,
            FrontEndConfig::Random { spread } => {
                let mut rng = ledger.stream("front-end draw", domain, 0);
                random_frontend(count, reference0, spread, &mut rng)?
            }
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_object_gives_reference_setup() {
        let cfg: ExperimentConfig = serde_json::from_str("{}").unwrap();
        assert_eq!(cfg, ExperimentConfig::default());
        assert_eq!(cfg.array.count(), 100);
        assert_eq!(cfg.reference0(), 37);
        assert_eq!(cfg.array.central_antenna(), 38);
        assert_eq!(cfg.coupling.sigma2, 1e-6);
        assert_eq!(cfg.capacity.users, 10);
        cfg.validate().unwrap();
    }

    #[test]
    fn round_trip() {
        let cfg = ExperimentConfig {
            frontend: FrontEndConfig::Random { spread: 0.1 },
            ..Default::default()
        };
        let text = serde_json::to_string(&cfg).unwrap();
        let back: ExperimentConfig = serde_json::from_str(&text).unwrap();
        assert_eq!(cfg, back);
    }

    #[test]
    fn invalid_values_are_rejected() {
        let bad = [
            r#"{"trials": 0}"#,
            r#"{"n0_db": []}"#,
            r#"{"reference": 0}"#,
            r#"{"reference": 101}"#,
            r#"{"coupling": {"sigma2": -1.0}}"#,
            r#"{"estimator": {"delta_ml": 0.0}}"#,
            r#"{"capacity": {"users": 101}}"#,
            r#"{"wideband": {"realizations": 1}}"#,
            r#"{"frontend": {"kind": "random", "spread": 1.5}}"#,
        ];
        for text in bad {
            let cfg: ExperimentConfig = serde_json::from_str(text).unwrap();
            assert!(cfg.validate().is_err(), "{text}");
        }
        assert!(serde_json::from_str::<ExperimentConfig>(r#"{"trails": 3}"#).is_err());
    }
}
