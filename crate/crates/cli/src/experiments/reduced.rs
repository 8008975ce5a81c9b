//! Bound increase when only pairs within a small radius are sounded.

use recical_core::geometry::reduced_mask;
use recical_core::{crlb_coefficients, from_db, CrlbInputs};

use super::Scenario;
use crate::config::{ExperimentConfig, ExperimentKind};
use crate::error::Result;
use crate::output::{num, Table};
use crate::seeds::SeedLedger;

#[derive(Debug, Clone, PartialEq)]
pub struct ReducedRow {
    pub n0_db: f64,
    /// One-based.
    pub antenna: usize,
    pub crlb_full_db: f64,
    pub crlb_reduced_db: f64,
}

impl ReducedRow {
    pub fn increase_db(&self) -> f64 {
        self.crlb_reduced_db - self.crlb_full_db
    }
}

#[derive(Debug, Clone, Default)]
pub struct ReducedSet {
    pub radius: f64,
    pub pairs_full: usize,
    pub pairs_reduced: usize,
    pub rows: Vec<ReducedRow>,
}

impl ReducedSet {
    pub fn get(&self, n0_db: f64, antenna: usize) -> Option<&ReducedRow> {
        self.rows
            .iter()
            .find(|r| r.n0_db == n0_db && r.antenna == antenna)
    }

    pub fn tables(&self) -> Vec<Table> {
        let mut t = Table::new(
            "reduced_set.csv",
            &[
                "n0_db",
                "antenna",
                "crlb_full_db",
                "crlb_reduced_db",
                "increase_db",
            ],
        );
        for r in &self.rows {
            t.push(vec![
                num(r.n0_db),
                r.antenna.to_string(),
                num(r.crlb_full_db),
                num(r.crlb_reduced_db),
                num(r.increase_db()),
            ]);
        }
        let mut masks = Table::new(
            "reduced_set_masks.csv",
            &["radius_wavelengths", "pairs_full", "pairs_reduced"],
        );
        masks.push(vec![
            num(self.radius),
            self.pairs_full.to_string(),
            self.pairs_reduced.to_string(),
        ]);
        vec![t, masks]
    }
}

pub fn run(cfg: &ExperimentConfig, ledger: &mut SeedLedger) -> Result<ReducedSet> {
    let sc = Scenario::from_config(cfg, ledger, ExperimentKind::ReducedSet)?;
    let radius = cfg.mse_sweep.reduced_radius;
    let full = sc.full_mask();
    let reduced = reduced_mask(&sc.geom, radius)?;
    let mut out = ReducedSet {
        radius,
        pairs_full: full.pairs().len(),
        pairs_reduced: reduced.pairs().len(),
        rows: Vec::new(),
    };
    for &n0_db in &cfg.n0_db {
        let n0 = from_db(n0_db);
        let bound = |mask| -> Result<_> {
            Ok(crlb_coefficients(&CrlbInputs::from_model(
                &sc.geom,
                &cfg.coupling,
                sc.fe.clone(),
                n0,
                mask,
            )?)?)
        };
        let a = bound(full.clone())?;
        let b = bound(reduced.clone())?;
        for m in (0..sc.geom.len()).filter(|&m| m != sc.reference) {
            out.rows.push(ReducedRow {
                n0_db,
                antenna: m + 1,
                crlb_full_db: a.bound_db(m),
                crlb_reduced_db: b.bound_db(m),
            });
        }
    }
    Ok(out)
}
