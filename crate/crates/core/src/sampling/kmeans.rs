use crate::clustering::kmeans::kmeans;
use crate::data::{DataMatrix, Dissimilarity};
use crate::default_sample_count;
use crate::error::{Error, Result};

use super::{check_sample_count, SampleSet, SamplerKind, SubsetAssignment};

/// k-means sampling: the `⌈√N⌉` centroids are the samples and each object is
/// represented by the centroid of its cluster.
pub fn kmeans_sample(data: &DataMatrix, f: Dissimilarity, seed: u64) -> Result<SampleSet> {
    kmeans_sample_with(data, f, default_sample_count(data.n_objects()), seed)
}

pub fn kmeans_sample_with(
    data: &DataMatrix,
    f: Dissimilarity,
    n_samples: usize,
    seed: u64,
) -> Result<SampleSet> {
    check_sample_count(data.n_objects(), n_samples)?;
    if f != Dissimilarity::SquaredEuclidean {
        return Err(Error::invalid(
            "k-means sampling requires squared Euclidean f",
        ));
    }
    let res = kmeans(data, n_samples, seed)?;
    Ok(SampleSet {
        method: SamplerKind::Kmeans,
        seed,
        assignment: SubsetAssignment::from_dense(res.labels, n_samples)?,
        representatives: Some(res.centroids),
        selected: None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{generate_synthetic, SyntheticKind};
    use crate::sampling::assign_nearest;

    const F: Dissimilarity = Dissimilarity::SquaredEuclidean;

    #[test]
    fn clusters_never_straddle_blobs() {
        let data = generate_synthetic(SyntheticKind::TwoBlobs, 16, 3).unwrap();
        let set = kmeans_sample_with(&data, F, 4, 0).unwrap();
        let truth = data.labels().unwrap();
        for members in set.assignment.members() {
            assert!(members.iter().all(|&i| truth[i] == truth[members[0]]));
        }
    }

    #[test]
    fn each_object_assigned_to_nearest_centroid() {
        let data = generate_synthetic(SyntheticKind::ThreeSpirals, 90, 3).unwrap();
        let set = kmeans_sample(&data, F, 5).unwrap();
        assert_eq!(set.n_samples(), 10);
        let reps = set.representatives.as_ref().unwrap();
        assert_eq!(assign_nearest(&data, reps, F), set.assignment.subset_id());
    }

    #[test]
    fn k_equals_n_and_determinism() {
        let data = generate_synthetic(SyntheticKind::TwoBlobs, 9, 1).unwrap();
        let set = kmeans_sample_with(&data, F, 9, 2).unwrap();
        assert_eq!(set.n_samples(), 9);
        assert_eq!(set, kmeans_sample_with(&data, F, 9, 2).unwrap());
        assert!(kmeans_sample_with(&data, F, 10, 2).is_err());
    }
}
