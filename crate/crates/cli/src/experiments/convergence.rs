//! EM convergence: MSE per iteration for several ridge penalties from the
//! GMM starting point, and iteration counts from random starting points on
//! arrays of growing size.

use rand::Rng;
use recical_core::estimators::em_solve;
use recical_core::{gmm_estimate, to_db, CalError, Constraint, EmInit};

use super::{mean_error, median_usize, par_trials, Scenario, TRIALS};
use crate::config::{ArrayConfig, ExperimentConfig, ExperimentKind};
use crate::error::Result;
use crate::output::{num, Table};
use crate::seeds::SeedLedger;

const KIND: ExperimentKind = ExperimentKind::Convergence;
/// Trial sub-domains of the random-initialisation study start here.
const RANDOM_TRIALS: u32 = TRIALS + 1024;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Init {
    Gmm,
    Random,
}

impl Init {
    pub fn name(self) -> &'static str {
        match self {
            Init::Gmm => "gmm",
            Init::Random => "random",
        }
    }
}

/// One EM run as seen by the observer.
#[derive(Debug, Clone)]
struct Trace {
    iterations: usize,
    converged: bool,
    degenerate: bool,
    /// Objective never increased between iterations.
    monotone: bool,
    /// Antenna-averaged squared error at iterations `0..=L`.
    mse: Vec<f64>,
    /// `‖Δĉ‖²` at iterations `1..=L`, zero after convergence.
    delta: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CurvePoint {
    pub epsilon: f64,
    pub iteration: usize,
    /// Mean over trials of the antenna-averaged MSE.
    pub mse_db: f64,
    pub delta: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub init: Init,
    pub antennas: usize,
    pub epsilon: f64,
    pub trials: usize,
    pub converged_fraction: f64,
    pub median_iterations: f64,
    pub monotone_fraction: f64,
    pub degenerate: usize,
}

#[derive(Debug, Clone, Default)]
pub struct Convergence {
    pub curve: Vec<CurvePoint>,
    pub summary: Vec<SummaryRow>,
}

impl Convergence {
    pub fn summary_for(&self, init: Init, antennas: usize, epsilon: f64) -> Option<&SummaryRow> {
        self.summary
            .iter()
            .find(|s| s.init == init && s.antennas == antennas && s.epsilon == epsilon)
    }

    pub fn tables(&self) -> Vec<Table> {
        let mut curve = Table::new(
            "convergence.csv",
            &["epsilon", "iteration", "mse_db", "delta_linear"],
        );
        for p in &self.curve {
            curve.push(vec![
                num(p.epsilon),
                p.iteration.to_string(),
                num(p.mse_db),
                num(p.delta),
            ]);
        }
        let mut summary = Table::new(
            "convergence_summary.csv",
            &[
                "init",
                "antennas",
                "epsilon",
                "trials",
                "converged_fraction",
                "median_iterations",
                "monotone_fraction",
                "degenerate",
            ],
        );
        for s in &self.summary {
            summary.push(vec![
                s.init.name().to_string(),
                s.antennas.to_string(),
                num(s.epsilon),
                s.trials.to_string(),
                num(s.converged_fraction),
                num(s.median_iterations),
                num(s.monotone_fraction),
                s.degenerate.to_string(),
            ]);
        }
        vec![curve, summary]
    }
}

fn summarize(init: Init, antennas: usize, epsilon: f64, traces: &[Trace]) -> SummaryRow {
    let n = traces.len() as f64;
    let mut its: Vec<usize> = traces.iter().map(|t| t.iterations).collect();
    SummaryRow {
        init,
        antennas,
        epsilon,
        trials: traces.len(),
        converged_fraction: traces.iter().filter(|t| t.converged).count() as f64 / n,
        median_iterations: median_usize(&mut its),
        monotone_fraction: traces.iter().filter(|t| t.monotone).count() as f64 / n,
        degenerate: traces.iter().filter(|t| t.degenerate).count(),
    }
}

fn run_traced(
    data: &recical_core::SoundingData,
    settings: &recical_core::EmSettings,
    init_c: Option<&[recical_core::Complex64]>,
    truth: &[recical_core::Complex64],
    reference: usize,
    logged: usize,
) -> Result<Trace> {
    let mut mse = Vec::with_capacity(logged + 1);
    if let Some(c0) = init_c {
        mse.push(mean_error(c0, truth, reference).unwrap_or(f64::NAN));
    }
    let mut delta = Vec::with_capacity(logged);
    let mut monotone = true;
    let mut last_obj = f64::INFINITY;
    let mut last_it = 0;
    let res = em_solve(data, settings, |it| {
        last_it = it.iteration;
        let obj = it.objective();
        if obj > last_obj * (1.0 + 1e-12) + 1e-300 {
            monotone = false;
        }
        last_obj = obj;
        if it.iteration <= logged {
            mse.push(mean_error(it.c, truth, reference).unwrap_or(f64::NAN));
            delta.push(it.delta);
        }
    });
    let (iterations, converged, degenerate) = match res {
        Ok(sol) => (sol.estimate.iterations, sol.estimate.converged, false),
        Err(CalError::Degenerate(_)) => (last_it, false, true),
        Err(e) => return Err(e.into()),
    };
    if let Some(&last) = mse.last() {
        mse.resize(logged + 1, last);
    }
    delta.resize(logged, 0.0);
    Ok(Trace {
        iterations,
        converged,
        degenerate,
        monotone,
        mse,
        delta,
    })
}

pub fn run(cfg: &ExperimentConfig, ledger: &mut SeedLedger) -> Result<Convergence> {
    let conv = &cfg.convergence;
    let logged = conv.logged_iterations;
    let mut out = Convergence::default();

    let sc = Scenario::from_config(cfg, ledger, KIND)?;
    let setup = sc.sounding(cfg, conv.n0_db, sc.full_mask());
    let truth = sc.truth();
    for (i, &eps) in conv.epsilons.iter().enumerate() {
        let settings = cfg.em_settings(eps, sc.reference);
        let streams = ledger.reserve(
            &format!("gmm-init trials, epsilon {eps}"),
            SeedLedger::domain(KIND, TRIALS + i as u32),
            cfg.trials,
        );
        let traces = par_trials(cfg.trials, |t| {
            let data = setup.draw(&sc.fe, &mut streams.get(t))?;
            let c0 = gmm_estimate(
                &data,
                Constraint::RefOne {
                    reference: sc.reference,
                },
            )?
            .c_hat;
            let s = settings.clone().with_init(EmInit::Explicit(c0.clone()));
            run_traced(&data, &s, Some(&c0), &truth, sc.reference, logged)
        })?;
        for it in 0..=logged {
            let vals: Vec<f64> = traces
                .iter()
                .map(|t| t.mse[it])
                .filter(|v| v.is_finite())
                .collect();
            let mse = vals.iter().sum::<f64>() / vals.len().max(1) as f64;
            let delta = if it == 0 {
                f64::NAN
            } else {
                traces.iter().map(|t| t.delta[it - 1]).sum::<f64>() / traces.len() as f64
            };
            out.curve.push(CurvePoint {
                epsilon: eps,
                iteration: it,
                mse_db: to_db(mse),
                delta,
            });
        }
        out.summary
            .push(summarize(Init::Gmm, sc.geom.len(), eps, &traces));
    }

    let trials = conv.random_init_trials.unwrap_or(cfg.trials);
    for (j, &[rows, cols]) in conv.random_init_arrays.iter().enumerate() {
        let array = ArrayConfig {
            rows,
            cols,
            spacing: cfg.array.spacing,
        };
        let reference = array.central_antenna() - 1;
        let sc = Scenario::build(cfg, &array, reference, ledger, KIND, 1 + j as u32)?;
        let setup = sc.sounding(cfg, conv.n0_db, sc.full_mask());
        let truth = sc.truth();
        let settings = cfg.em_settings(conv.random_init_epsilon, reference);
        let streams = ledger.reserve(
            &format!("random-init trials, {rows}x{cols} array"),
            SeedLedger::domain(KIND, RANDOM_TRIALS + j as u32),
            trials,
        );
        let traces = par_trials(trials, |t| {
            let mut rng = streams.get(t);
            let data = setup.draw(&sc.fe, &mut rng)?;
            let s = settings.clone().with_init(EmInit::Random { seed: rng.random() });
            run_traced(&data, &s, None, &truth, reference, 0)
        })?;
        out.summary.push(summarize(
            Init::Random,
            sc.geom.len(),
            conv.random_init_epsilon,
            &traces,
        ));
    }
    Ok(out)
}
