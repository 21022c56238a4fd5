use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::data::{DataMatrix, Dissimilarity};
use crate::default_sample_count;
use crate::error::Result;

use super::{assign_nearest, check_sample_count, SampleSet, SamplerKind, SubsetAssignment};

/// Uniform sampling of `⌈√N⌉` distinct objects without replacement.
pub fn random_sample(data: &DataMatrix, f: Dissimilarity, seed: u64) -> Result<SampleSet> {
    random_sample_with(data, f, default_sample_count(data.n_objects()), seed)
}

pub fn random_sample_with(
    data: &DataMatrix,
    f: Dissimilarity,
    n_samples: usize,
    seed: u64,
) -> Result<SampleSet> {
    let n = data.n_objects();
    check_sample_count(n, n_samples)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut selected = rand::seq::index::sample(&mut rng, n, n_samples).into_vec();
    selected.sort_unstable();
    from_selected(data, f, SamplerKind::Random, selected, seed)
}

/// Sample set made of actual objects; others go to the nearest selected one.
pub(super) fn from_selected(
    data: &DataMatrix,
    f: Dissimilarity,
    method: SamplerKind,
    selected: Vec<usize>,
    seed: u64,
) -> Result<SampleSet> {
    let rows: Vec<Vec<f64>> = selected.iter().map(|&i| data.row(i).to_vec()).collect();
    let reps = DataMatrix::from_rows(&rows, None)?;
    let mut ids = assign_nearest(data, &reps, f);
    // Duplicate rows would otherwise steal a selected object from its own sample.
    for (s, &obj) in selected.iter().enumerate() {
        ids[obj] = s;
    }
    Ok(SampleSet {
        method,
        seed,
        assignment: SubsetAssignment::from_dense(ids, selected.len())?,
        representatives: Some(reps),
        selected: Some(selected),
    })
}
