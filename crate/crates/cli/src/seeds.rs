//! Seed ledger: every random stream an experiment opens is derived from
//! `(master seed, domain, index)` and recorded for the manifest.
//!
//! Domains carry the experiment id in the upper 32 bits, so no two
//! experiments can share a stream.

use recical_core::random::{stream, SimRng};
use serde::Serialize;

use crate::config::ExperimentKind;

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SeedEntry {
    pub purpose: String,
    pub domain: u64,
    /// Stream indices `first_index..first_index + count`.
    pub first_index: u64,
    pub count: u64,
}

#[derive(Debug, Clone, Serialize)]
pub struct SeedLedger {
    pub master: u64,
    pub entries: Vec<SeedEntry>,
}

/// Per-trial streams of one domain, cheap to copy into worker threads.
#[derive(Debug, Clone, Copy)]
pub struct TrialStreams {
    master: u64,
    domain: u64,
    count: usize,
}

impl TrialStreams {
    pub fn get(&self, trial: usize) -> SimRng {
        assert!(trial < self.count, "trial {trial} was not reserved");
        stream(self.master, self.domain, trial as u64)
    }
}

impl SeedLedger {
    pub fn new(master: u64) -> Self {
        SeedLedger {
            master,
            entries: Vec::new(),
        }
    }

    pub fn domain(kind: ExperimentKind, sub: u32) -> u64 {
        (kind.id() << 32) | sub as u64
    }

    fn record(&mut self, purpose: &str, domain: u64, count: u64) {
        assert!(
            self.entries.iter().all(|e| e.domain != domain),
            "seed domain {domain:#x} opened twice"
        );
        self.entries.push(SeedEntry {
            purpose: purpose.to_string(),
            domain,
            first_index: 0,
            count,
        });
    }

    /// A single stream, for one-off setup draws.
    pub fn stream(&mut self, purpose: &str, domain: u64, index: u64) -> SimRng {
        self.record(purpose, domain, 1);
        stream(self.master, domain, index)
    }

    pub fn reserve(&mut self, purpose: &str, domain: u64, count: usize) -> TrialStreams {
        self.record(purpose, domain, count as u64);
        TrialStreams {
            master: self.master,
            domain,
            count,
        }
    }
}
