//! Clustering of embedded samples and extension of sample labels to objects.

pub mod gmm;
pub mod kmeans;

use std::io::Write;

use crate::embedding::Embedding;
use crate::error::{Error, Result};
use crate::sampling::SampleSet;

pub use gmm::{gmm_fit, GmmFit, GmmModel};

/// Cluster labels in `0..n_clusters`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClusterLabels {
    labels: Vec<usize>,
    n_clusters: usize,
}

impl ClusterLabels {
    pub fn new(labels: Vec<usize>, n_clusters: usize) -> Result<Self> {
        if let Some(bad) = labels.iter().find(|&&l| l >= n_clusters) {
            return Err(Error::invalid(format!("label {bad} >= {n_clusters}")));
        }
        Ok(Self { labels, n_clusters })
    }

    /// Uses `max + 1` as the cluster count.
    pub fn from_vec(labels: Vec<usize>) -> Self {
        let n_clusters = labels.iter().copied().max().map_or(0, |m| m + 1);
        Self { labels, n_clusters }
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn n_clusters(&self) -> usize {
        self.n_clusters
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }
}

fn check_k(embedding: &Embedding, k: usize) -> Result<()> {
    let s = embedding.n_points();
    if k == 0 || k > s {
        return Err(Error::invalid(format!(
            "k={k} must be in 1..={s} (number of samples)"
        )));
    }
    Ok(())
}

/// Diagonal GMM on the embedded samples; labels by maximum responsibility.
pub fn gmm_fit_predict(
    embedding: &Embedding,
    k: usize,
    restarts: usize,
    seed: u64,
) -> Result<ClusterLabels> {
    check_k(embedding, k)?;
    let fit = gmm_fit(embedding.coords(), k, restarts, seed)?;
    ClusterLabels::new(fit.labels, k)
}

/// Lloyd's k-means on the embedded samples.
pub fn kmeans_fit_predict(embedding: &Embedding, k: usize, seed: u64) -> Result<ClusterLabels> {
    check_k(embedding, k)?;
    let res = kmeans::kmeans(embedding.coords(), k, seed)?;
    ClusterLabels::new(res.labels, k)
}

/// Gives every object the label of the sample that represents it.
pub fn extend_labels(sample_labels: &ClusterLabels, samples: &SampleSet) -> Result<ClusterLabels> {
    if sample_labels.len() != samples.n_samples() {
        return Err(Error::invalid(format!(
            "{} sample labels for {} samples",
            sample_labels.len(),
            samples.n_samples()
        )));
    }
    let labels = samples
        .assignment
        .subset_id()
        .iter()
        .map(|&s| sample_labels.labels[s])
        .collect();
    Ok(ClusterLabels {
        labels,
        n_clusters: sample_labels.n_clusters,
    })
}

/// Writes `object,predicted[,truth]` rows.
pub fn write_labels_csv<W: Write>(
    pred: &ClusterLabels,
    truth: Option<&[usize]>,
    mut w: W,
) -> std::io::Result<()> {
    match truth {
        Some(t) => {
            writeln!(w, "object,predicted,truth")?;
            for (i, (p, t)) in pred.labels.iter().zip(t).enumerate() {
                writeln!(w, "{i},{p},{t}")?;
            }
        }
        None => {
            writeln!(w, "object,predicted")?;
            for (i, p) in pred.labels.iter().enumerate() {
                writeln!(w, "{i},{p}")?;
            }
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::embedding::{eigendecompose, embed, to_mercer_kernel};
    use crate::minimax::MinimaxMatrix;
    use crate::sampling::{SamplerKind, SubsetAssignment};

    fn sample_set(ids: Vec<usize>, s: usize) -> SampleSet {
        SampleSet {
            method: SamplerKind::Mm,
            seed: 0,
            assignment: SubsetAssignment::from_dense(ids, s).unwrap(),
            representatives: None,
            selected: None,
        }
    }

    /// 1-D embedding of points at the given positions (distances = squared gaps).
    fn line_embedding(xs: &[f64]) -> Embedding {
        let n = xs.len();
        let mut e = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                e[i * n + j] = (xs[i] - xs[j]).powi(2);
            }
        }
        let m = MinimaxMatrix::from_entries(n, e).unwrap();
        let mut eig = eigendecompose(&to_mercer_kernel(&m).unwrap()).unwrap();
        eig.clip_negatives();
        embed(&eig, 1).unwrap()
    }

    #[test]
    fn extend_by_lookup() {
        let labels = ClusterLabels::new(vec![0, 1], 2).unwrap();
        let out = extend_labels(&labels, &sample_set(vec![0, 0, 1, 1], 2)).unwrap();
        assert_eq!(out.labels(), &[0, 0, 1, 1]);
        let constant = ClusterLabels::new(vec![1, 1], 2).unwrap();
        let out = extend_labels(&constant, &sample_set(vec![1, 0, 1, 0], 2)).unwrap();
        assert!(out.labels().iter().all(|&l| l == 1));
        let swapped = ClusterLabels::new(vec![1, 0], 2).unwrap();
        let out = extend_labels(&swapped, &sample_set(vec![0, 0, 1, 1], 2)).unwrap();
        assert_eq!(out.labels(), &[1, 1, 0, 0]);
        assert!(extend_labels(&labels, &sample_set(vec![0, 1, 2], 3)).is_err());
    }

    #[test]
    fn embedded_clusters_separate() {
        let xs: Vec<f64> = (0..10)
            .map(|i| {
                if i < 5 {
                    -10.0 - i as f64 * 0.1
                } else {
                    10.0 + i as f64 * 0.1
                }
            })
            .collect();
        let emb = line_embedding(&xs);
        for labels in [
            gmm_fit_predict(&emb, 2, 10, 1).unwrap(),
            kmeans_fit_predict(&emb, 2, 1).unwrap(),
        ] {
            for i in 0..10 {
                for j in 0..10 {
                    assert_eq!(
                        labels.labels()[i] == labels.labels()[j],
                        (xs[i] < 0.0) == (xs[j] < 0.0)
                    );
                }
            }
        }
        assert_eq!(
            gmm_fit_predict(&emb, 2, 3, 4).unwrap(),
            gmm_fit_predict(&emb, 2, 3, 4).unwrap()
        );
        assert_eq!(
            kmeans_fit_predict(&emb, 2, 4).unwrap(),
            kmeans_fit_predict(&emb, 2, 4).unwrap()
        );
    }

    #[test]
    fn k_equals_s_gives_singletons() {
        let emb = line_embedding(&[0.0, 1.0, 3.0, 7.0]);
        let mut l = kmeans_fit_predict(&emb, 4, 0).unwrap().labels().to_vec();
        l.sort_unstable();
        assert_eq!(l, vec![0, 1, 2, 3]);
        assert!(gmm_fit_predict(&emb, 5, 1, 0).is_err());
        assert!(gmm_fit_predict(&emb, 1, 1, 0)
            .unwrap()
            .labels()
            .iter()
            .all(|&x| x == 0));
    }

    #[test]
    fn labels_csv() {
        let pred = ClusterLabels::new(vec![1, 0], 2).unwrap();
        let mut out = Vec::new();
        write_labels_csv(&pred, Some(&[0, 0]), &mut out).unwrap();
        assert_eq!(
            String::from_utf8(out).unwrap(),
            "object,predicted,truth\n0,1,0\n1,0,0\n"
        );
        assert!(ClusterLabels::new(vec![3], 2).is_err());
    }
}
