//! Cramér-Rao bound of every antenna over the noise grid.

use recical_core::{crlb_coefficients, from_db, CrlbInputs};

use super::Scenario;
use crate::config::{ExperimentConfig, ExperimentKind};
use crate::error::Result;
use crate::output::{num, Table};
use crate::seeds::SeedLedger;

#[derive(Debug, Clone, PartialEq)]
pub struct CrlbCell {
    pub n0_db: f64,
    /// One-based.
    pub antenna: usize,
    /// One-based grid position.
    pub row: usize,
    pub col: usize,
    /// `NaN` at the reference.
    pub crlb_db: f64,
    pub fim_condition: f64,
}

#[derive(Debug, Clone, Default)]
pub struct CrlbMap {
    pub cells: Vec<CrlbCell>,
}

impl CrlbMap {
    pub fn tables(&self) -> Vec<Table> {
        let mut t = Table::new(
            "crlb_map.csv",
            &[
                "n0_db",
                "antenna",
                "row",
                "col",
                "crlb_db",
                "fim_condition_linear",
            ],
        );
        for c in &self.cells {
            t.push(vec![
                num(c.n0_db),
                c.antenna.to_string(),
                c.row.to_string(),
                c.col.to_string(),
                num(c.crlb_db),
                num(c.fim_condition),
            ]);
        }
        vec![t]
    }
}

pub fn run(cfg: &ExperimentConfig, ledger: &mut SeedLedger) -> Result<CrlbMap> {
    // the bound only needs |h̄|, but the scenario records the same setup
    // draws as the other experiments
    let sc = Scenario::from_config(cfg, ledger, ExperimentKind::CrlbMap)?;
    let mut out = CrlbMap::default();
    for &n0_db in &cfg.n0_db {
        let report = crlb_coefficients(&CrlbInputs::from_model(
            &sc.geom,
            &cfg.coupling,
            sc.fe.clone(),
            from_db(n0_db),
            sc.full_mask(),
        )?)?;
        for m in 0..sc.geom.len() {
            let (row, col) = sc.geom.cell(m)?;
            out.cells.push(CrlbCell {
                n0_db,
                antenna: m + 1,
                row: row + 1,
                col: col + 1,
                crlb_db: report.bound_db(m),
                fim_condition: report.fim_condition,
            });
        }
    }
    Ok(out)
}
