//! Pairwise Minimax (path-based) distances under a linear memory budget.
//!
//! The pipeline follows five stages:
//!
//! 1. pick `⌈√N⌉` samples from the data ([`sampling`]),
//! 2. compute the Minimax distances between the samples ([`minimax`], [`sampling`]),
//! 3. embed those distances into a Euclidean space ([`embedding`]),
//! 4. cluster the embedded samples ([`clustering`]),
//! 5. extend the sample labels to every object ([`clustering::extend_labels`]).
//!
//! [`pipeline::run_pipeline`] wires the stages together and tracks the number
//! of live auxiliary entries so the `O(N)` space claim can be checked directly.
//!
//! ```
//! use mmsample::data::{generate_synthetic, SyntheticKind};
//! use mmsample::minimax::{minimax_from_mst, prim_incremental};
//! use mmsample::data::Dissimilarity;
//!
//! let data = generate_synthetic(SyntheticKind::TwoBlobs, 20, 3).unwrap();
//! let mst = prim_incremental(&data, Dissimilarity::SquaredEuclidean, 0).unwrap();
//! let m = minimax_from_mst(&mst).unwrap();
//! assert_eq!(m.size(), 20);
//! assert!(m.is_ultrametric());
//! ```

pub mod clustering;
pub mod data;
pub mod dsu;
pub mod embedding;
pub mod error;
pub mod evaluation;
pub mod memory;
pub mod minimax;
pub mod pipeline;
pub mod sampling;
pub mod seeds;

pub use error::{Error, Result};

/// Default number of samples for `n` objects: `⌈√n⌉`.
pub fn default_sample_count(n: usize) -> usize {
    if n == 0 {
        return 0;
    }
    let mut r = (n as f64).sqrt() as usize;
    while r * r > n {
        r -= 1;
    }
    while r * r < n {
        r += 1;
    }
    r
}
