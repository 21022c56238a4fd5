//! Bookkeeping for auxiliary storage.
//!
//! Every structure whose size depends on `N` (the Prim `l` vector, the edge
//! list `T`, subset ids, `M_s`, the kernel, the embedding, ...) registers its
//! entry count here while it is alive. Feature values are not counted: only
//! the pairwise side of the computation is memory-constrained.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

#[derive(Debug, Default, Clone)]
pub struct MemoryTracker {
    live: BTreeMap<&'static str, usize>,
    current: usize,
    peak: usize,
    largest_single: usize,
    largest_label: Option<&'static str>,
}

impl MemoryTracker {
    pub fn new() -> Self {
        Self::default()
    }

    /// Registers (or resizes) the structure `label` as holding `entries` scalars.
    pub fn set(&mut self, label: &'static str, entries: usize) {
        let old = self.live.insert(label, entries).unwrap_or(0);
        self.current = self.current - old + entries;
        self.peak = self.peak.max(self.current);
        if entries > self.largest_single {
            self.largest_single = entries;
            self.largest_label = Some(label);
        }
    }

    pub fn release(&mut self, label: &'static str) {
        if let Some(old) = self.live.remove(label) {
            self.current -= old;
        }
    }

    pub fn current(&self) -> usize {
        self.current
    }

    pub fn peak(&self) -> usize {
        self.peak
    }

    /// Size of the largest single structure ever registered.
    pub fn largest_single(&self) -> usize {
        self.largest_single
    }

    pub fn largest_label(&self) -> Option<&'static str> {
        self.largest_label
    }

    pub fn report(&self, n_objects: usize) -> MemoryReport {
        MemoryReport {
            peak_aux_entries: self.peak,
            largest_structure_entries: self.largest_single,
            n_objects,
        }
    }
}

/// Peak auxiliary storage of one pipeline run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct MemoryReport {
    pub peak_aux_entries: usize,
    pub largest_structure_entries: usize,
    pub n_objects: usize,
}

impl MemoryReport {
    /// Peak entries per object.
    pub fn ratio(&self) -> f64 {
        self.peak_aux_entries as f64 / self.n_objects as f64
    }
}
