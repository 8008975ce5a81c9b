//! Reproducible experiment runner for coupling-based reciprocity
//! calibration.
//!
//! [`run_experiment`] validates a configuration, runs one experiment, writes
//! its CSV tables into `<out_dir>/<experiment>/` and finishes with a
//! `manifest.json` that echoes the configuration and lists every output file
//! and random stream.

pub mod config;
pub mod error;
pub mod experiments;
pub mod output;
pub mod seeds;

use std::time::Instant;

pub use crate::config::{ExperimentConfig, ExperimentKind};
pub use crate::error::{HarnessError, Result};
use crate::output::{OutputFile, RunManifest, Table, WallTimes};
use crate::seeds::SeedLedger;

/// Runs `kind` and returns its tables together with the seed ledger.
pub fn compute(kind: ExperimentKind, cfg: &ExperimentConfig) -> Result<(Vec<Table>, SeedLedger)> {
    cfg.validate()?;
    let mut ledger = SeedLedger::new(cfg.seed);
    let l = &mut ledger;
    let tables = match kind {
        ExperimentKind::MseSweep => experiments::mse::run(cfg, l)?.tables(),
        ExperimentKind::Convergence => experiments::convergence::run(cfg, l)?.tables(),
        ExperimentKind::Capacity => experiments::capacity::run(cfg, l)?.tables(),
        ExperimentKind::Wideband => experiments::wideband::run(cfg, l)?.tables(),
        ExperimentKind::CrlbMap => experiments::crlb_map::run(cfg, l)?.tables(),
        ExperimentKind::ReducedSet => experiments::reduced::run(cfg, l)?.tables(),
    };
    Ok((tables, ledger))
}

/// Computes and persists one experiment.
pub fn run_experiment(kind: ExperimentKind, cfg: &ExperimentConfig) -> Result<RunManifest> {
    let t0 = Instant::now();
    let (tables, seeds) = compute(kind, cfg)?;
    let compute_s = t0.elapsed().as_secs_f64();

    let t1 = Instant::now();
    let dir = cfg.out_dir.join(kind.name());
    std::fs::create_dir_all(&dir).map_err(|e| HarnessError::io(&dir, e))?;
    let mut outputs = Vec::with_capacity(tables.len());
    for t in &tables {
        let path = t.write(&dir)?;
        let bytes = std::fs::metadata(&path)
            .map_err(|e| HarnessError::io(&path, e))?
            .len();
        if t.rows.is_empty() || bytes == 0 {
            return Err(HarnessError::config(format!(
                "{} came out empty; check the configuration",
                path.display()
            )));
        }
        outputs.push(OutputFile {
            path,
            bytes,
            rows: t.rows.len(),
        });
    }
    let write_s = t1.elapsed().as_secs_f64();
    let manifest = RunManifest {
        experiment: kind.name().to_string(),
        code_version: env!("CARGO_PKG_VERSION").to_string(),
        config: cfg.clone(),
        wall_time_s: WallTimes {
            compute: compute_s,
            write: write_s,
            total: t0.elapsed().as_secs_f64(),
        },
        outputs,
        seeds,
    };
    manifest.write(&dir)?;
    Ok(manifest)
}
