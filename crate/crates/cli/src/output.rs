//! CSV tables and the run manifest.
//!
//! Header names carry their unit (`_db`, `_linear`, `_bps_hz`, ...). Numbers
//! are written with Rust's shortest round-trip formatting, which is
//! platform-independent, so equal results give byte-identical files.

use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::config::ExperimentConfig;
use crate::error::{HarnessError, Result};
use crate::seeds::SeedLedger;

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    /// File name inside the experiment directory.
    pub file: String,
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(file: &str, header: &[&str]) -> Self {
        Table {
            file: file.to_string(),
            header: header.iter().map(|s| s.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        assert_eq!(
            row.len(),
            self.header.len(),
            "row width mismatch in {}",
            self.file
        );
        self.rows.push(row);
    }

    pub fn write(&self, dir: &Path) -> Result<PathBuf> {
        let path = dir.join(&self.file);
        let mut w = csv::Writer::from_path(&path)?;
        w.write_record(&self.header)?;
        for row in &self.rows {
            w.write_record(row)?;
        }
        w.flush().map_err(|e| HarnessError::io(&path, e))?;
        Ok(path)
    }
}

/// Formats a float for CSV output.
pub fn num(x: f64) -> String {
    format!("{x}")
}

#[derive(Debug, Clone, Serialize)]
pub struct OutputFile {
    pub path: PathBuf,
    pub bytes: u64,
    pub rows: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub experiment: String,
    pub code_version: String,
    pub config: ExperimentConfig,
    /// Seconds spent computing and writing.
    pub wall_time_s: WallTimes,
    pub outputs: Vec<OutputFile>,
    pub seeds: SeedLedger,
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct WallTimes {
    pub compute: f64,
    pub write: f64,
    pub total: f64,
}

impl RunManifest {
    pub fn write(&self, dir: &Path) -> Result<PathBuf> {
        let path = dir.join("manifest.json");
        let text = serde_json::to_string_pretty(self)?;
        std::fs::write(&path, text + "\n").map_err(|e| HarnessError::io(&path, e))?;
        Ok(path)
    }
}
