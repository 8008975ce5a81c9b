//! Monte-Carlo MSE of GMM and EM against the Cramér-Rao bound, swept over
//! the sounding noise level.

use recical_core::estimators::MseAccumulator;
use recical_core::geometry::reduced_mask;
use recical_core::{
    crlb_coefficients, em_calibrate, from_db, gmm_estimate, to_db, Constraint, CrlbInputs, EmInit, Method,
};

use super::{par_trials, Scenario, TRIALS};
use crate::config::{ExperimentConfig, ExperimentKind};
use crate::error::Result;
use crate::output::{num, Table};
use crate::seeds::SeedLedger;

const KIND: ExperimentKind = ExperimentKind::MseSweep;

#[derive(Debug, Clone, PartialEq)]
pub struct MseRow {
    pub n0_db: f64,
    /// One-based.
    pub antenna: usize,
    pub method: Method,
    pub mse_db: f64,
    pub crlb_db: f64,
    pub crlb_reduced_db: f64,
    /// Trials that entered the average.
    pub trials: usize,
}

#[derive(Debug, Clone, Default)]
pub struct MseSweep {
    pub rows: Vec<MseRow>,
}

impl MseSweep {
    pub fn get(&self, n0_db: f64, antenna: usize, method: Method) -> Option<&MseRow> {
        self.rows
            .iter()
            .find(|r| r.n0_db == n0_db && r.antenna == antenna && r.method == method)
    }

    pub fn tables(&self) -> Vec<Table> {
        let mut t = Table::new(
            "mse_sweep.csv",
            &[
                "n0_db",
                "antenna",
                "method",
                "mse_db",
                "crlb_db",
                "crlb_reduced_db",
                "trials",
            ],
        );
        for r in &self.rows {
            t.push(vec![
                num(r.n0_db),
                r.antenna.to_string(),
                r.method.name().to_string(),
                num(r.mse_db),
                num(r.crlb_db),
                num(r.crlb_reduced_db),
                r.trials.to_string(),
            ]);
        }
        vec![t]
    }
}

pub fn run(cfg: &ExperimentConfig, ledger: &mut SeedLedger) -> Result<MseSweep> {
    let sc = Scenario::from_config(cfg, ledger, KIND)?;
    let full = sc.full_mask();
    let reduced = reduced_mask(&sc.geom, cfg.mse_sweep.reduced_radius)?;
    let truth = sc.fe.coefficients();
    let settings = cfg.em_settings(cfg.estimator.epsilon, sc.reference);
    let mut out = MseSweep::default();

    for (i, &n0_db) in cfg.n0_db.iter().enumerate() {
        let n0 = from_db(n0_db);
        let bound = crlb_coefficients(&CrlbInputs::from_model(
            &sc.geom,
            &cfg.coupling,
            sc.fe.clone(),
            n0,
            full.clone(),
        )?)?;
        let bound_reduced = crlb_coefficients(&CrlbInputs::from_model(
            &sc.geom,
            &cfg.coupling,
            sc.fe.clone(),
            n0,
            reduced.clone(),
        )?)?;

        let setup = sc.sounding(cfg, n0_db, full.clone());
        let streams = ledger.reserve(
            &format!("mse trials at {n0_db} dB"),
            SeedLedger::domain(KIND, TRIALS + i as u32),
            cfg.trials,
        );
        let estimates = par_trials(cfg.trials, |t| {
            let data = setup.draw(&sc.fe, &mut streams.get(t))?;
            let gmm = gmm_estimate(
                &data,
                Constraint::RefOne {
                    reference: sc.reference,
                },
            )?;
            // GMM initialisation, without solving GMM a second time
            let em_settings = settings.clone().with_init(EmInit::Explicit(gmm.c_hat.clone()));
            let em = em_calibrate(&data, &em_settings)?;
            Ok((gmm.c_hat, em.c_hat))
        })?;

        let mut acc_gmm = MseAccumulator::new(&truth, sc.reference)?;
        let mut acc_em = MseAccumulator::new(&truth, sc.reference)?;
        for (g, e) in &estimates {
            acc_gmm.add(g);
            acc_em.add(e);
        }
        for (method, acc) in [(Method::Gmm, acc_gmm), (Method::Em, acc_em)] {
            let report = acc.finish()?;
            for &antenna in &cfg.mse_sweep.antennas {
                let m = antenna - 1;
                out.rows.push(MseRow {
                    n0_db,
                    antenna,
                    method,
                    mse_db: to_db(report.per_antenna[m]),
                    crlb_db: bound.bound_db(m),
                    crlb_reduced_db: bound_reduced.bound_db(m),
                    trials: report.trials,
                });
            }
        }
    }
    Ok(out)
}
