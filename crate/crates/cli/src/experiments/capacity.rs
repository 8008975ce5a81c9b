//! Downlink sum-rate distributions for each calibration variant under ZF
//! and MRT precoding.

use recical_core::downlink::{capacity_trial, CapacityTrial, DownlinkScenario};
use recical_core::{Precoder, Variant};

use super::{par_trials, quantile, Scenario, TRIALS};
use crate::config::{ExperimentConfig, ExperimentKind};
use crate::error::Result;
use crate::output::{num, Table};
use crate::seeds::SeedLedger;

const KIND: ExperimentKind = ExperimentKind::Capacity;
pub const PRECODERS: [Precoder; 2] = [Precoder::Zf, Precoder::Mrt];
/// Quantiles written to the summary table.
pub const DECILES: [f64; 9] = [0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9];

#[derive(Debug, Clone, Default)]
pub struct Capacity {
    pub trials: Vec<CapacityTrial>,
}

impl Capacity {
    /// Sum rates of one variant and precoder, in trial order.
    pub fn rates(&self, variant: Variant, precoder: Precoder) -> Vec<f64> {
        self.trials
            .iter()
            .filter_map(|t| {
                t.rates
                    .iter()
                    .find(|(v, p, _)| *v == variant && *p == precoder)
                    .map(|r| r.2)
            })
            .collect()
    }

    pub fn quantile(&self, variant: Variant, precoder: Precoder, p: f64) -> f64 {
        let mut r = self.rates(variant, precoder);
        r.sort_by(f64::total_cmp);
        quantile(&r, p)
    }

    pub fn tables(&self) -> Vec<Table> {
        let mut samples = Table::new(
            "capacity.csv",
            &["trial", "precoder", "variant", "sum_rate_bps_hz"],
        );
        for (i, t) in self.trials.iter().enumerate() {
            for (v, p, r) in &t.rates {
                samples.push(vec![i.to_string(), p.name().into(), v.name().into(), num(*r)]);
            }
        }
        let mut deciles = Table::new(
            "capacity_deciles.csv",
            &["precoder", "variant", "quantile", "sum_rate_bps_hz"],
        );
        for p in PRECODERS {
            for v in Variant::ALL {
                let mut r = self.rates(v, p);
                r.sort_by(f64::total_cmp);
                for q in DECILES {
                    deciles.push(vec![
                        p.name().into(),
                        v.name().into(),
                        num(q),
                        num(quantile(&r, q)),
                    ]);
                }
            }
        }
        vec![samples, deciles]
    }
}

pub fn run(cfg: &ExperimentConfig, ledger: &mut SeedLedger) -> Result<Capacity> {
    let cap = &cfg.capacity;
    let sc = Scenario::from_config(cfg, ledger, KIND)?;
    let scenario = DownlinkScenario {
        users: cap.users,
        n_w: cap.n_w,
        sounding: sc.sounding(cfg, cap.n0_db, sc.full_mask()),
        em: cfg.em_settings(cfg.estimator.epsilon, sc.reference),
        fe: sc.fe,
    };
    scenario.validate()?;
    let streams = ledger.reserve("capacity trials", SeedLedger::domain(KIND, TRIALS), cfg.trials);
    let trials = par_trials(cfg.trials, |t| {
        Ok(capacity_trial(
            &scenario,
            &Variant::ALL,
            &PRECODERS,
            &mut streams.get(t),
        )?)
    })?;
    Ok(Capacity { trials })
}
