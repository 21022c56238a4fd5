//! k-DPP sampling over an RBF similarity kernel.
//!
//! The kernel is `N × N`, so this sampler is meant to run offline; its
//! sample set can be stored as JSON and handed to a memory-constrained run.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::data::{DataMatrix, Dissimilarity};
use crate::default_sample_count;
use crate::embedding::{eigendecompose, EigenSystem, KernelMatrix};
use crate::error::{Error, Result};

use super::random::from_selected;
use super::{check_sample_count, SampleSet, SamplerKind};

/// Default object cap for DPP sampling.
pub const DPP_CAP: usize = 3000;
const BANDWIDTH_PAIRS: usize = 1000;

/// L-ensemble kernel `L_ij = exp(−f(i,j) / 2σ²)`.
#[derive(Debug, Clone, PartialEq)]
pub struct DppKernel {
    kernel: KernelMatrix,
    sigma2: f64,
}

impl DppKernel {
    /// RBF kernel with `σ²` set to the median of `f` over random distinct pairs.
    pub fn rbf(data: &DataMatrix, f: Dissimilarity, rng: &mut impl Rng) -> Result<Self> {
        let n = data.n_objects();
        let mut sample: Vec<f64> = (0..BANDWIDTH_PAIRS)
            .map(|_| {
                let i = rng.random_range(0..n);
                let mut j = rng.random_range(0..n - 1);
                if j >= i {
                    j += 1;
                }
                f.eval(data.row(i), data.row(j))
            })
            .collect();
        sample.sort_by(f64::total_cmp);
        let mid = sample.len() / 2;
        let mut sigma2 = if sample.len() % 2 == 0 {
            0.5 * (sample[mid - 1] + sample[mid])
        } else {
            sample[mid]
        };
        if !(sigma2 > 0.0) {
            sigma2 = sample.iter().sum::<f64>() / sample.len() as f64;
        }
        if !(sigma2 > 0.0) {
            sigma2 = 1.0;
        }
        Self::with_bandwidth(data, f, sigma2)
    }

    pub fn with_bandwidth(data: &DataMatrix, f: Dissimilarity, sigma2: f64) -> Result<Self> {
        let n = data.n_objects();
        let mut entries = vec![0.0; n * n];
        for i in 0..n {
            entries[i * n + i] = 1.0;
            for j in i + 1..n {
                let v = (-f.eval(data.row(i), data.row(j)) / (2.0 * sigma2)).exp();
                entries[i * n + j] = v;
                entries[j * n + i] = v;
            }
        }
        Ok(Self {
            kernel: KernelMatrix::from_entries(n, entries)?,
            sigma2,
        })
    }

    pub fn sigma2(&self) -> f64 {
        self.sigma2
    }

    pub fn kernel(&self) -> &KernelMatrix {
        &self.kernel
    }

    /// Eigensystem with the (PSD) spectrum clipped at zero.
    pub fn eigensystem(&self) -> Result<EigenSystem> {
        let mut eig = eigendecompose(&self.kernel)?;
        eig.clip_negatives();
        Ok(eig)
    }
}

/// Elementary symmetric polynomials `e[l][m]` of the first `m` eigenvalues, `l ≤ k`.
fn elementary_symmetric(lambda: &[f64], k: usize) -> Vec<Vec<f64>> {
    let n = lambda.len();
    let mut e = vec![vec![0.0; n + 1]; k + 1];
    e[0].iter_mut().for_each(|v| *v = 1.0);
    for l in 1..=k {
        for m in 1..=n {
            e[l][m] = e[l][m - 1] + lambda[m - 1] * e[l - 1][m - 1];
        }
    }
    e
}

/// Draws a size-`k` subset from the k-DPP defined by `eig` (an L-ensemble
/// eigensystem). Returns the selected indices in ascending order.
pub fn sample_k_dpp(eig: &EigenSystem, k: usize, rng: &mut impl Rng) -> Result<Vec<usize>> {
    let n = eig.size();
    if k == 0 || k > n {
        return Err(Error::invalid(format!("k-DPP with k={k} over {n} items")));
    }
    // Rescaling λ leaves the k-DPP unchanged and keeps e[k][n] finite.
    let top = eig.eigenvalues().first().copied().unwrap_or(0.0);
    if !(top > 0.0) {
        return Err(Error::invalid("DPP kernel has no positive eigenvalue"));
    }
    let lambda: Vec<f64> = eig
        .eigenvalues()
        .iter()
        .map(|l| (l / top).max(0.0))
        .collect();
    let e = elementary_symmetric(&lambda, k);
    if !(e[k][n] > 0.0) || !e[k][n].is_finite() {
        return Err(Error::invalid(format!("kernel rank is below k={k}")));
    }

    // Phase 1: choose k eigenvectors.
    let mut chosen = Vec::with_capacity(k);
    let mut l = k;
    for m in (1..=n).rev() {
        if l == 0 {
            break;
        }
        let p = if l == m {
            1.0
        } else {
            lambda[m - 1] * e[l - 1][m - 1] / e[l][m]
        };
        if rng.random::<f64>() < p {
            chosen.push(m - 1);
            l -= 1;
        }
    }
    if l != 0 {
        return Err(Error::invalid("k-DPP eigenvector selection underflowed"));
    }

    // Phase 2: sample from the projection DPP spanned by the chosen vectors.
    // basis[c] is an n-vector; kept orthonormal by Gram–Schmidt.
    let mut basis: Vec<Vec<f64>> = chosen
        .iter()
        .map(|&c| (0..n).map(|i| eig.vector(i, c)).collect())
        .collect();
    let mut selected = Vec::with_capacity(k);
    while !basis.is_empty() {
        let weights: Vec<f64> = (0..n)
            .map(|i| {
                if selected.contains(&i) {
                    0.0
                } else {
                    basis.iter().map(|v| v[i] * v[i]).sum::<f64>()
                }
            })
            .collect();
        let total: f64 = weights.iter().sum();
        let mut target = rng.random::<f64>() * total;
        let mut item = None;
        for (i, &w) in weights.iter().enumerate() {
            if w > 0.0 {
                item = Some(i);
                if target < w {
                    break;
                }
                target -= w;
            }
        }
        let item = item.ok_or_else(|| Error::invalid("projection DPP lost all mass"))?;
        selected.push(item);

        // Eliminate the component along e_item using the vector with the largest entry there.
        let pivot = (0..basis.len())
            .max_by(|&a, &b| basis[a][item].abs().total_cmp(&basis[b][item].abs()))
            .expect("non-empty basis");
        let pv = basis.swap_remove(pivot);
        for v in basis.iter_mut() {
            let ratio = v[item] / pv[item];
            v.iter_mut().zip(&pv).for_each(|(x, p)| *x -= ratio * p);
        }
        for a in 0..basis.len() {
            for b in 0..a {
                let dot: f64 = basis[a].iter().zip(&basis[b]).map(|(x, y)| x * y).sum();
                let (head, tail) = basis.split_at_mut(a);
                tail[0]
                    .iter_mut()
                    .zip(&head[b])
                    .for_each(|(x, y)| *x -= dot * y);
            }
            let norm = basis[a].iter().map(|x| x * x).sum::<f64>().sqrt();
            if norm > 0.0 {
                basis[a].iter_mut().for_each(|x| *x /= norm);
            }
        }
    }
    selected.sort_unstable();
    Ok(selected)
}

/// DPP sampling with `⌈√N⌉` samples.
pub fn dpp_sample(data: &DataMatrix, f: Dissimilarity, seed: u64) -> Result<SampleSet> {
    dpp_sample_with(
        data,
        f,
        default_sample_count(data.n_objects()),
        seed,
        DPP_CAP,
    )
}

pub fn dpp_sample_with(
    data: &DataMatrix,
    f: Dissimilarity,
    n_samples: usize,
    seed: u64,
    cap: usize,
) -> Result<SampleSet> {
    let n = data.n_objects();
    if n > cap {
        return Err(Error::CapExceeded {
            what: "DPP kernel",
            size: n,
            cap,
        });
    }
    check_sample_count(n, n_samples)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let kernel = DppKernel::rbf(data, f, &mut rng)?;
    let eig = kernel.eigensystem()?;
    drop(kernel);
    let selected = sample_k_dpp(&eig, n_samples, &mut rng)?;
    from_selected(data, f, SamplerKind::Dpp, selected, seed)
}
