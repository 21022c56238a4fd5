//! Lloyd's k-means with k-means++ seeding.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::data::{DataMatrix, Dissimilarity};
use crate::error::{Error, Result};

pub const MAX_ITERATIONS: usize = 300;
pub const RELATIVE_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq)]
pub struct KMeansResult {
    /// `k × D` row-major centroids.
    pub centroids: DataMatrix,
    pub labels: Vec<usize>,
    pub inertia: f64,
    pub iterations: usize,
}

/// k-means++ seeding: first center uniform, the rest proportional to the
/// squared distance to the nearest chosen center. Returns object indices.
pub fn kmeans_plus_plus(points: &DataMatrix, k: usize, rng: &mut impl Rng) -> Vec<usize> {
    let n = points.n_objects();
    let f = Dissimilarity::SquaredEuclidean;
    let mut chosen = Vec::with_capacity(k);
    let first = rng.random_range(0..n);
    chosen.push(first);
    let mut d2: Vec<f64> = (0..n)
        .map(|i| f.eval(points.row(i), points.row(first)))
        .collect();
    while chosen.len() < k {
        let total: f64 = d2.iter().sum();
        let next = if total > 0.0 {
            let mut target = rng.random::<f64>() * total;
            let mut pick = None;
            for (i, &d) in d2.iter().enumerate() {
                if d > 0.0 {
                    pick = Some(i);
                    if target < d {
                        break;
                    }
                    target -= d;
                }
            }
            pick.expect("positive mass")
        } else {
            // every point coincides with a center already
            (0..n).find(|i| !chosen.contains(i)).expect("k <= n")
        };
        chosen.push(next);
        let c = points.row(next);
        for (i, d) in d2.iter_mut().enumerate() {
            *d = d.min(f.eval(points.row(i), c));
        }
    }
    chosen
}

/// Lloyd's algorithm. Stops after [`MAX_ITERATIONS`] or when the inertia
/// changes by less than [`RELATIVE_TOLERANCE`] relative. Empty clusters are
/// re-seeded with the point farthest from its centroid.
pub fn kmeans(points: &DataMatrix, k: usize, seed: u64) -> Result<KMeansResult> {
    let n = points.n_objects();
    let d = points.n_features();
    if k == 0 || k > n {
        return Err(Error::invalid(format!("k-means with k={k} on {n} points")));
    }
    let f = Dissimilarity::SquaredEuclidean;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let init = kmeans_plus_plus(points, k, &mut rng);
    let mut centroids: Vec<f64> = init.iter().flat_map(|&i| points.row(i).to_vec()).collect();
    let mut labels = vec![0usize; n];
    let mut dist = vec![0.0; n];
    let mut prev_inertia = f64::INFINITY;
    let mut inertia = f64::INFINITY;
    let mut iterations = 0;

    while iterations < MAX_ITERATIONS {
        iterations += 1;
        for i in 0..n {
            let x = points.row(i);
            let (mut best, mut best_d) = (0, f64::INFINITY);
            for c in 0..k {
                let dc = f.eval(x, &centroids[c * d..(c + 1) * d]);
                if dc < best_d {
                    best_d = dc;
                    best = c;
                }
            }
            labels[i] = best;
            dist[i] = best_d;
        }

        let mut counts = vec![0usize; k];
        labels.iter().for_each(|&l| counts[l] += 1);
        for c in 0..k {
            if counts[c] > 0 {
                continue;
            }
            let far = (0..n)
                .filter(|&i| counts[labels[i]] > 1)
                .max_by(|&a, &b| dist[a].total_cmp(&dist[b]).then(b.cmp(&a)))
                .expect("k <= n leaves a donor cluster");
            counts[labels[far]] -= 1;
            labels[far] = c;
            counts[c] = 1;
            dist[far] = 0.0;
        }

        centroids.iter_mut().for_each(|v| *v = 0.0);
        for i in 0..n {
            let c = labels[i];
            for (acc, x) in centroids[c * d..(c + 1) * d].iter_mut().zip(points.row(i)) {
                *acc += x;
            }
        }
        for c in 0..k {
            let inv = 1.0 / counts[c] as f64;
            centroids[c * d..(c + 1) * d]
                .iter_mut()
                .for_each(|v| *v *= inv);
        }
        inertia = (0..n)
            .map(|i| {
                f.eval(
                    points.row(i),
                    &centroids[labels[i] * d..(labels[i] + 1) * d],
                )
            })
            .sum();
        if inertia == 0.0 || (prev_inertia - inertia).abs() <= RELATIVE_TOLERANCE * prev_inertia {
            break;
        }
        prev_inertia = inertia;
    }

    // final assignment against the final centroids, unless it would empty a cluster
    let mut final_labels = vec![0usize; n];
    let mut counts = vec![0usize; k];
    let mut final_inertia = 0.0;
    for i in 0..n {
        let x = points.row(i);
        let (mut best, mut best_d) = (0, f64::INFINITY);
        for c in 0..k {
            let dc = f.eval(x, &centroids[c * d..(c + 1) * d]);
            if dc < best_d {
                best_d = dc;
                best = c;
            }
        }
        final_labels[i] = best;
        counts[best] += 1;
        final_inertia += best_d;
    }
    if counts.iter().all(|&c| c > 0) {
        labels = final_labels;
        inertia = final_inertia;
    }

    Ok(KMeansResult {
        centroids: DataMatrix::new(k, d, centroids, None)?,
        labels,
        inertia,
        iterations,
    })
}
