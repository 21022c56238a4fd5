//! Minimax (MM) sampling.
//!
//! MST edges are visited in ascending order. The first `N − s` edges merge
//! objects into `s` connected subsets; each subset is one sample. The
//! remaining `s − 1` edges keep merging, now at sample level, and each such
//! merge at height `w` writes `w` into `M_s` for every pair of samples it
//! joins. Those `s − 1` heights are exactly the largest MST weights.

use crate::default_sample_count;
use crate::dsu::DisjointSet;
use crate::error::{Error, Result};
use crate::memory::MemoryTracker;
use crate::minimax::{MemberLists, MinimaxMatrix, MstEdgeList};

use super::{check_sample_count, SampleDistanceMatrix, SampleSet, SamplerKind, SubsetAssignment};

/// MM sampling with `⌈√N⌉` samples. Sorts `mst` in place.
pub fn mm_sample(mst: &mut MstEdgeList) -> Result<(SampleSet, SampleDistanceMatrix)> {
    let s = default_sample_count(mst.n_objects());
    mm_sample_tracked(mst, s, &mut MemoryTracker::new())
}

pub fn mm_sample_tracked(
    mst: &mut MstEdgeList,
    n_samples: usize,
    tracker: &mut MemoryTracker,
) -> Result<(SampleSet, SampleDistanceMatrix)> {
    let n = mst.n_objects();
    check_sample_count(n, n_samples)?;
    mst.validate()?;
    mst.sort_ascending();
    let edges = mst.edges();
    let n_merge = n - n_samples;

    let mut dsu = DisjointSet::new(n);
    tracker.set("mm.dsu", dsu.entries());
    for e in &edges[..n_merge] {
        dsu.union(e.u, e.v).ok_or_else(|| Error::NotSpanning {
            n,
            reason: format!("edge ({}, {}) closes a cycle", e.u, e.v),
        })?;
    }
    let roots: Vec<usize> = (0..n).map(|i| dsu.find(i)).collect();
    let assignment = SubsetAssignment::from_raw_ids(&roots);
    drop(roots);
    tracker.set("samples.subset_id", n);
    drop(dsu);
    tracker.release("mm.dsu");
    debug_assert_eq!(assignment.n_subsets(), n_samples);

    let s = n_samples;
    let mut m_s = MinimaxMatrix::zeros(s);
    tracker.set("ms", s * s);
    let mut sample_dsu = DisjointSet::new(s);
    let mut groups = MemberLists::new(s);
    tracker.set("mm.sample_merge", sample_dsu.entries() + groups.entries());
    for e in &edges[n_merge..] {
        let a = sample_dsu.find(assignment.sample_of(e.u));
        let b = sample_dsu.find(assignment.sample_of(e.v));
        for x in groups.iter(a) {
            for y in groups.iter(b) {
                m_s.set_sym(x, y, e.weight);
            }
        }
        let root = sample_dsu
            .union(a, b)
            .expect("spanning tree edges join distinct samples");
        groups.append(root, if root == a { b } else { a });
    }
    tracker.release("mm.sample_merge");

    let set = SampleSet {
        method: SamplerKind::Mm,
        seed: 0,
        assignment,
        representatives: None,
        selected: None,
    };
    Ok((set, m_s))
}
