//! Minimax distances: incremental Prim's MST over the implicit complete graph,
//! the dense Minimax matrix recovered from an MST, and a Floyd–Warshall oracle.
//!
//! The Minimax distance between `i` and `j` is the smallest achievable
//! bottleneck (largest edge weight) over all paths from `i` to `j`. Any MST of
//! the dissimilarity graph carries enough information to recover all of them.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::data::{DataMatrix, Dissimilarity};
use crate::dsu::DisjointSet;
use crate::error::{Error, Result};
use crate::memory::MemoryTracker;

/// Default object cap for [`minimax_oracle`] (cubic time, quadratic memory).
pub const ORACLE_CAP: usize = 500;
/// Default object cap for anything that materializes an `N × N` matrix.
pub const DENSE_CAP: usize = 5000;

/// One MST edge: a row `(weight, u, v)` of the edge matrix `T`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MstEdge {
    pub weight: f64,
    pub u: usize,
    pub v: usize,
}

impl MstEdge {
    fn key(&self) -> (f64, usize, usize) {
        (self.weight, self.u.min(self.v), self.u.max(self.v))
    }
}

/// The `(N−1) × 3` edge list of a minimum spanning tree.
#[derive(Debug, Clone, PartialEq)]
pub struct MstEdgeList {
    n_objects: usize,
    edges: Vec<MstEdge>,
}

impl MstEdgeList {
    /// Wraps raw edges; call [`MstEdgeList::validate`] to check the spanning-tree invariant.
    pub fn new(n_objects: usize, edges: Vec<MstEdge>) -> Self {
        Self { n_objects, edges }
    }

    pub fn n_objects(&self) -> usize {
        self.n_objects
    }

    pub fn edges(&self) -> &[MstEdge] {
        &self.edges
    }

    pub fn total_weight(&self) -> f64 {
        self.edges.iter().map(|e| e.weight).sum()
    }

    /// Sorts edges by ascending weight, ties broken by the `(min, max)` endpoint pair.
    pub fn sort_ascending(&mut self) {
        self.edges.sort_by(|a, b| {
            let (ka, kb) = (a.key(), b.key());
            ka.0.total_cmp(&kb.0)
                .then(ka.1.cmp(&kb.1))
                .then(ka.2.cmp(&kb.2))
        });
    }

    pub fn is_sorted(&self) -> bool {
        self.edges.windows(2).all(|w| w[0].weight <= w[1].weight)
    }

    /// Checks that the edges form a spanning tree: `N−1` in-range, acyclic edges
    /// with finite non-negative weights.
    pub fn validate(&self) -> Result<()> {
        let n = self.n_objects;
        let fail = |reason: String| Error::NotSpanning { n, reason };
        if n == 0 {
            return Err(fail("no objects".into()));
        }
        if self.edges.len() != n - 1 {
            return Err(fail(format!(
                "expected {} edges, found {}",
                n - 1,
                self.edges.len()
            )));
        }
        let mut dsu = DisjointSet::new(n);
        for (k, e) in self.edges.iter().enumerate() {
            if e.u >= n || e.v >= n {
                return Err(fail(format!("edge {k} has an endpoint out of range")));
            }
            if !(e.weight.is_finite() && e.weight >= 0.0) {
                return Err(fail(format!("edge {k} has invalid weight {}", e.weight)));
            }
            if dsu.union(e.u, e.v).is_none() {
                return Err(fail(format!("edge {k} ({}, {}) closes a cycle", e.u, e.v)));
            }
        }
        Ok(())
    }
}

/// A dense symmetric matrix of Minimax distances with zero diagonal.
#[derive(Debug, Clone, PartialEq)]
pub struct MinimaxMatrix {
    size: usize,
    entries: Vec<f64>,
}

impl MinimaxMatrix {
    pub fn zeros(size: usize) -> Self {
        Self {
            size,
            entries: vec![0.0; size * size],
        }
    }

    /// Builds a matrix from row-major entries, checking symmetry, the zero
    /// diagonal and non-negativity.
    pub fn from_entries(size: usize, entries: Vec<f64>) -> Result<Self> {
        if entries.len() != size * size {
            return Err(Error::invalid(format!(
                "expected {} entries for a {size}x{size} matrix",
                size * size
            )));
        }
        let m = Self { size, entries };
        for i in 0..size {
            if m.get(i, i) != 0.0 {
                return Err(Error::invalid(format!("non-zero diagonal at {i}")));
            }
            for j in 0..size {
                let v = m.get(i, j);
                if !(v.is_finite() && v >= 0.0) {
                    return Err(Error::invalid(format!("invalid entry {v} at ({i}, {j})")));
                }
                if v != m.get(j, i) {
                    return Err(Error::invalid(format!("asymmetric at ({i}, {j})")));
                }
            }
        }
        Ok(m)
    }

    pub fn size(&self) -> usize {
        self.size
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries[i * self.size + j]
    }

    #[inline]
    pub(crate) fn set_sym(&mut self, i: usize, j: usize, v: f64) {
        self.entries[i * self.size + j] = v;
        self.entries[j * self.size + i] = v;
    }

    pub fn entries(&self) -> &[f64] {
        &self.entries
    }

    pub fn max_entry(&self) -> f64 {
        self.entries.iter().copied().fold(0.0, f64::max)
    }

    /// `d(i,k) ≤ max(d(i,j), d(j,k))` for every triple.
    pub fn is_ultrametric(&self) -> bool {
        let n = self.size;
        (0..n).all(|i| {
            (0..n).all(|j| {
                let dij = self.get(i, j);
                (0..n).all(|k| self.get(i, k) <= dij.max(self.get(j, k)))
            })
        })
    }
}

/// Prim's MST over the implicit complete graph of `data` under `f`.
///
/// Only `O(N)` auxiliary state is kept: the distance vector `l` (set to `+∞`
/// for objects already in the tree), the tree-side endpoint of each `l` entry,
/// and the output edge list. The start object is drawn from `seed`; argmin ties
/// go to the lowest index.
pub fn prim_incremental(data: &DataMatrix, f: Dissimilarity, seed: u64) -> Result<MstEdgeList> {
    prim_incremental_tracked(data, f, seed, &mut MemoryTracker::new())
}

pub fn prim_incremental_tracked(
    data: &DataMatrix,
    f: Dissimilarity,
    seed: u64,
    tracker: &mut MemoryTracker,
) -> Result<MstEdgeList> {
    let n = data.n_objects();
    if n < 2 {
        return Err(Error::invalid(format!(
            "Prim needs at least 2 objects, got {n}"
        )));
    }
    let start = ChaCha8Rng::seed_from_u64(seed).random_range(0..n);

    let start_row = data.row(start);
    let mut l: Vec<f64> = (0..n).map(|i| f.eval(start_row, data.row(i))).collect();
    let mut nearest = vec![start; n];
    l[start] = f64::INFINITY;
    let mut edges = Vec::with_capacity(n - 1);
    tracker.set("prim.l", n);
    tracker.set("prim.nearest", n);
    tracker.set("mst.edges", 3 * (n - 1));

    for _ in 1..n {
        let mut u = usize::MAX;
        let mut best = f64::INFINITY;
        for (i, &li) in l.iter().enumerate() {
            if li < best {
                best = li;
                u = i;
            }
        }
        if u == usize::MAX {
            return Err(Error::invalid("dissimilarity overflowed to +inf"));
        }
        edges.push(MstEdge {
            weight: best,
            u: nearest[u],
            v: u,
        });
        l[u] = f64::INFINITY;
        let urow = data.row(u);
        for (i, li) in l.iter_mut().enumerate() {
            if *li != f64::INFINITY {
                let d = f.eval(urow, data.row(i));
                if d < *li {
                    *li = d;
                    nearest[i] = u;
                }
            }
        }
    }
    tracker.release("prim.l");
    tracker.release("prim.nearest");
    Ok(MstEdgeList::new(n, edges))
}

/// Floyd–Warshall style Minimax closure. Test-only reference: cubic time.
pub fn minimax_oracle(data: &DataMatrix, f: Dissimilarity) -> Result<MinimaxMatrix> {
    minimax_oracle_with_cap(data, f, ORACLE_CAP)
}

pub fn minimax_oracle_with_cap(
    data: &DataMatrix,
    f: Dissimilarity,
    cap: usize,
) -> Result<MinimaxMatrix> {
    let n = data.n_objects();
    if n > cap {
        return Err(Error::CapExceeded {
            what: "minimax oracle input",
            size: n,
            cap,
        });
    }
    let mut m = MinimaxMatrix::zeros(n);
    for i in 0..n {
        for j in i + 1..n {
            m.set_sym(i, j, f.eval(data.row(i), data.row(j)));
        }
    }
    for k in 0..n {
        for i in 0..n {
            let mik = m.entries[i * n + k];
            for j in 0..n {
                let via = mik.max(m.entries[k * n + j]);
                if via < m.entries[i * n + j] {
                    m.entries[i * n + j] = via;
                }
            }
        }
    }
    Ok(m)
}

/// Dense Minimax matrix from an MST: the entry for `(i, j)` is the largest
/// edge on the tree path, obtained as the single-linkage merge height.
pub fn minimax_from_mst(mst: &MstEdgeList) -> Result<MinimaxMatrix> {
    minimax_from_mst_with_cap(mst, DENSE_CAP)
}

pub fn minimax_from_mst_with_cap(mst: &MstEdgeList, cap: usize) -> Result<MinimaxMatrix> {
    let n = mst.n_objects();
    if n > cap {
        return Err(Error::CapExceeded {
            what: "dense minimax matrix",
            size: n,
            cap,
        });
    }
    mst.validate()?;
    let mut sorted = mst.clone();
    sorted.sort_ascending();

    let mut m = MinimaxMatrix::zeros(n);
    let mut groups = MemberLists::new(n);
    let mut dsu = DisjointSet::new(n);
    for e in sorted.edges() {
        let (ra, rb) = (dsu.find(e.u), dsu.find(e.v));
        for a in groups.iter(ra) {
            for b in groups.iter(rb) {
                m.set_sym(a, b, e.weight);
            }
        }
        let root = dsu.union(ra, rb).expect("validated tree has no cycles");
        let other = if root == ra { rb } else { ra };
        groups.append(root, other);
    }
    Ok(m)
}

/// Singly linked member lists keyed by group root, `O(n)` entries total.
#[derive(Debug, Clone)]
pub(crate) struct MemberLists {
    head: Vec<usize>,
    tail: Vec<usize>,
    next: Vec<usize>,
}

const NIL: usize = usize::MAX;

impl MemberLists {
    pub(crate) fn new(n: usize) -> Self {
        Self {
            head: (0..n).collect(),
            tail: (0..n).collect(),
            next: vec![NIL; n],
        }
    }

    pub(crate) fn entries(&self) -> usize {
        3 * self.head.len()
    }

    /// Moves the members of `from` to the end of `into`.
    pub(crate) fn append(&mut self, into: usize, from: usize) {
        let t = self.tail[into];
        self.next[t] = self.head[from];
        self.tail[into] = self.tail[from];
        self.head[from] = NIL;
        self.tail[from] = NIL;
    }

    pub(crate) fn iter(&self, key: usize) -> impl Iterator<Item = usize> + '_ {
        let mut cur = self.head[key];
        std::iter::from_fn(move || {
            if cur == NIL {
                return None;
            }
            let out = cur;
            cur = self.next[cur];
            Some(out)
        })
    }
}
