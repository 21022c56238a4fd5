//! Sample selection: every scheme produces `⌈√N⌉` samples (unless overridden),
//! a total object → sample assignment, and the Minimax matrix `M_s` between
//! samples.

mod dpp;
mod kmeans;
mod mm;
mod random;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::data::{DataMatrix, Dissimilarity};
use crate::error::{Error, Result};
use crate::memory::MemoryTracker;
use crate::minimax::{minimax_from_mst_with_cap, prim_incremental_tracked, MinimaxMatrix};

pub use dpp::{dpp_sample, dpp_sample_with, sample_k_dpp, DppKernel, DPP_CAP};
pub use kmeans::{kmeans_sample, kmeans_sample_with};
pub use mm::{mm_sample, mm_sample_tracked};
pub use random::{random_sample, random_sample_with};

/// Minimax distances between samples (`M_s`).
pub type SampleDistanceMatrix = MinimaxMatrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SamplerKind {
    Mm,
    Kmeans,
    Dpp,
    Random,
}

impl SamplerKind {
    pub fn as_str(self) -> &'static str {
        match self {
            SamplerKind::Mm => "mm",
            SamplerKind::Kmeans => "kmeans",
            SamplerKind::Dpp => "dpp",
            SamplerKind::Random => "random",
        }
    }
}

impl fmt::Display for SamplerKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SamplerKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "mm" => Ok(Self::Mm),
            "kmeans" => Ok(Self::Kmeans),
            "dpp" => Ok(Self::Dpp),
            "random" => Ok(Self::Random),
            other => Err(Error::invalid(format!("unknown sampler `{other}`"))),
        }
    }
}

/// Object → sample mapping with dense sample ids `0..n_samples`.
///
/// Dense ids are ordered by the smallest object index in each sample.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SubsetAssignment {
    subset_id: Vec<usize>,
    n_subsets: usize,
}

impl SubsetAssignment {
    /// Reindexes arbitrary subset ids densely, first appearance in object order first.
    pub fn from_raw_ids(raw: &[usize]) -> Self {
        let mut dense = std::collections::HashMap::new();
        let subset_id = raw
            .iter()
            .map(|id| {
                let next = dense.len();
                *dense.entry(*id).or_insert(next)
            })
            .collect();
        Self {
            subset_id,
            n_subsets: dense.len(),
        }
    }

    /// Wraps already-dense sample ids. Every id in `0..n_subsets` must be used.
    pub fn from_dense(subset_id: Vec<usize>, n_subsets: usize) -> Result<Self> {
        let mut seen = vec![false; n_subsets];
        for &id in &subset_id {
            if id >= n_subsets {
                return Err(Error::invalid(format!("sample id {id} >= {n_subsets}")));
            }
            seen[id] = true;
        }
        if let Some(missing) = seen.iter().position(|s| !s) {
            return Err(Error::invalid(format!(
                "sample {missing} represents no object"
            )));
        }
        Ok(Self {
            subset_id,
            n_subsets,
        })
    }

    /// Every object as its own sample.
    pub fn identity(n: usize) -> Self {
        Self {
            subset_id: (0..n).collect(),
            n_subsets: n,
        }
    }

    pub fn subset_id(&self) -> &[usize] {
        &self.subset_id
    }

    pub fn sample_of(&self, object: usize) -> usize {
        self.subset_id[object]
    }

    pub fn n_subsets(&self) -> usize {
        self.n_subsets
    }

    pub fn n_objects(&self) -> usize {
        self.subset_id.len()
    }

    /// Objects of each sample, in object order.
    pub fn members(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.n_subsets];
        for (obj, &s) in self.subset_id.iter().enumerate() {
            out[s].push(obj);
        }
        out
    }
}

/// The output of a sampler.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleSet {
    pub method: SamplerKind,
    pub seed: u64,
    pub assignment: SubsetAssignment,
    /// Centroids (k-means) or selected object rows (DPP, random); `None` for MM.
    pub representatives: Option<DataMatrix>,
    /// Selected object indices for DPP and random sampling.
    pub selected: Option<Vec<usize>>,
}

impl SampleSet {
    pub fn n_samples(&self) -> usize {
        self.assignment.n_subsets()
    }

    pub fn to_json(&self) -> SampleSetJson {
        SampleSetJson {
            method: self.method,
            seed: self.seed,
            n_samples: self.n_samples(),
            subset_id: self.assignment.subset_id().to_vec(),
            selected: self.selected.clone(),
        }
    }
}

/// On-disk form of a [`SampleSet`], used to hand offline samples to the pipeline.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SampleSetJson {
    pub method: SamplerKind,
    pub seed: u64,
    pub n_samples: usize,
    pub subset_id: Vec<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub selected: Option<Vec<usize>>,
}

/// Index of the nearest row of `reps` to each object; ties go to the lowest index.
pub fn assign_nearest(data: &DataMatrix, reps: &DataMatrix, f: Dissimilarity) -> Vec<usize> {
    (0..data.n_objects())
        .map(|i| {
            let x = data.row(i);
            let mut best = 0;
            let mut best_d = f64::INFINITY;
            for r in 0..reps.n_objects() {
                let d = f.eval(x, reps.row(r));
                if d < best_d {
                    best_d = d;
                    best = r;
                }
            }
            best
        })
        .collect()
}

fn check_sample_count(n: usize, s: usize) -> Result<()> {
    if n < 4 {
        return Err(Error::invalid(format!(
            "sampling needs at least 4 objects, got {n}"
        )));
    }
    if s == 0 || s > n {
        return Err(Error::invalid(format!(
            "cannot draw {s} samples from {n} objects"
        )));
    }
    Ok(())
}

/// `M_s` for representative-based samplers: Prim over the representatives
/// followed by the dense Minimax matrix of that small tree.
pub fn sample_minimax(
    samples: &SampleSet,
    f: Dissimilarity,
    seed: u64,
) -> Result<SampleDistanceMatrix> {
    sample_minimax_tracked(samples, f, seed, &mut MemoryTracker::new())
}

pub fn sample_minimax_tracked(
    samples: &SampleSet,
    f: Dissimilarity,
    seed: u64,
    tracker: &mut MemoryTracker,
) -> Result<SampleDistanceMatrix> {
    if samples.method == SamplerKind::Mm {
        return Err(Error::invalid("MM samples carry M_s from mm_sample"));
    }
    let reps = samples
        .representatives
        .as_ref()
        .ok_or_else(|| Error::invalid("sample set has no representatives"))?;
    let s = reps.n_objects();
    if s == 1 {
        return Ok(MinimaxMatrix::zeros(1));
    }
    let mst = prim_incremental_tracked(reps, f, seed, tracker)?;
    let m = minimax_from_mst_with_cap(&mst, usize::MAX)?;
    tracker.release("mst.edges");
    tracker.set("ms", s * s);
    Ok(m)
}
