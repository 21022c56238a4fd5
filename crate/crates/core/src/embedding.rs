//! Euclidean embedding of a Minimax matrix by classical scaling.
//!
//! The Minimax matrix is double-centered into a Gram (Mercer) kernel
//! `K = −½·J·M·J`, eigendecomposed, and the top `d′` eigenvectors scaled by
//! `√λ` give coordinates whose pairwise squared Euclidean distances reproduce
//! `M` (exactly at full rank, since Minimax distances are ultrametric).

use std::io::Write;

use nalgebra::{DMatrix, SymmetricEigen};

use crate::data::DataMatrix;
use crate::error::{Error, Result};
use crate::minimax::MinimaxMatrix;

/// Eigenvalues in `[−CLIP_TOLERANCE·λ₁, 0)` are treated as rounding noise.
pub const CLIP_TOLERANCE: f64 = 1e-9;
/// Default cap on the elbow search.
pub const DEFAULT_MAX_DIM: usize = 50;

/// A dense symmetric matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelMatrix {
    size: usize,
    entries: Vec<f64>,
}

impl KernelMatrix {
    pub fn from_entries(size: usize, entries: Vec<f64>) -> Result<Self> {
        if entries.len() != size * size {
            return Err(Error::invalid(format!(
                "kernel needs {} entries",
                size * size
            )));
        }
        Ok(Self { size, entries })
    }

    pub fn identity(size: usize) -> Self {
        let mut entries = vec![0.0; size * size];
        (0..size).for_each(|i| entries[i * size + i] = 1.0);
        Self { size, entries }
    }

    pub fn size(&self) -> usize {
        self.size
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries[i * self.size + j]
    }

    pub fn entries(&self) -> &[f64] {
        &self.entries
    }

    pub fn max_abs(&self) -> f64 {
        self.entries.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

/// Double centering `K = −½·J·M·J`, `J = I − 𝟙𝟙ᵀ/s`.
pub fn to_mercer_kernel(m: &MinimaxMatrix) -> Result<KernelMatrix> {
    let s = m.size();
    if s == 0 {
        return Err(Error::Empty("empty distance matrix".into()));
    }
    for i in 0..s {
        if m.get(i, i) != 0.0 {
            return Err(Error::invalid(format!("non-zero diagonal at {i}")));
        }
        for j in 0..s {
            if m.get(i, j) < 0.0 || m.get(i, j) != m.get(j, i) {
                return Err(Error::invalid(format!(
                    "distance matrix must be symmetric and non-negative (entry {i},{j})"
                )));
            }
        }
    }
    let inv = 1.0 / s as f64;
    let row_mean: Vec<f64> = (0..s)
        .map(|i| (0..s).map(|j| m.get(i, j)).sum::<f64>() * inv)
        .collect();
    let grand = row_mean.iter().sum::<f64>() * inv;
    let mut entries = vec![0.0; s * s];
    for i in 0..s {
        for j in 0..s {
            // M symmetric, so column means equal row means
            entries[i * s + j] = -0.5 * (m.get(i, j) - row_mean[i] - row_mean[j] + grand);
        }
    }
    Ok(KernelMatrix { size: s, entries })
}

/// Eigenvalues in descending order with matching orthonormal eigenvectors.
#[derive(Debug, Clone, PartialEq)]
pub struct EigenSystem {
    size: usize,
    eigenvalues: Vec<f64>,
    /// Row-major `s × s`; column `j` is the eigenvector of `eigenvalues[j]`.
    eigenvectors: Vec<f64>,
}

/// Outcome of [`EigenSystem::clip_negatives`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClipReport {
    pub clipped: usize,
    /// Eigenvalues still below `−CLIP_TOLERANCE·λ₁` (left untouched).
    pub significant_negatives: usize,
    /// `Σ|λ⁻| / Σ|λ|` before clipping.
    pub negative_mass_ratio: f64,
}

impl EigenSystem {
    pub fn size(&self) -> usize {
        self.size
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    /// Component `i` of eigenvector `j`.
    #[inline]
    pub fn vector(&self, i: usize, j: usize) -> f64 {
        self.eigenvectors[i * self.size + j]
    }

    pub fn negative_mass_ratio(&self) -> f64 {
        let total: f64 = self.eigenvalues.iter().map(|l| l.abs()).sum();
        if total == 0.0 {
            return 0.0;
        }
        let neg: f64 = self
            .eigenvalues
            .iter()
            .filter(|l| **l < 0.0)
            .map(|l| -l)
            .sum();
        neg / total
    }

    /// Sets eigenvalues in `[−CLIP_TOLERANCE·λ₁, 0)` to zero.
    pub fn clip_negatives(&mut self) -> ClipReport {
        let ratio = self.negative_mass_ratio();
        let tol = CLIP_TOLERANCE * self.eigenvalues.first().copied().unwrap_or(0.0).max(0.0);
        let mut clipped = 0;
        let mut significant = 0;
        for l in self.eigenvalues.iter_mut() {
            if *l < 0.0 {
                if *l >= -tol {
                    *l = 0.0;
                    clipped += 1;
                } else {
                    significant += 1;
                }
            }
        }
        if significant > 0 {
            log::warn!(
                "kernel has {significant} eigenvalues below -{CLIP_TOLERANCE:e}·λ₁ (negative mass ratio {ratio:e})"
            );
        }
        ClipReport {
            clipped,
            significant_negatives: significant,
            negative_mass_ratio: ratio,
        }
    }

    /// Number of non-negative eigenvalues, i.e. the largest valid `d′`.
    pub fn nonnegative_count(&self) -> usize {
        self.eigenvalues.iter().take_while(|l| **l >= 0.0).count()
    }

    /// `λᵢ / λ₁`.
    pub fn normalized_spectrum(&self) -> Vec<f64> {
        let top = self.eigenvalues.first().copied().unwrap_or(0.0);
        if top <= 0.0 {
            return vec![0.0; self.size];
        }
        self.eigenvalues.iter().map(|l| l / top).collect()
    }
}

/// Full symmetric eigendecomposition (Householder tridiagonalization plus
/// implicit QR). The largest-magnitude component of every eigenvector is
/// made positive.
pub fn eigendecompose(k: &KernelMatrix) -> Result<EigenSystem> {
    let s = k.size();
    if s == 0 {
        return Err(Error::Empty("empty kernel".into()));
    }
    let scale = k.max_abs().max(f64::MIN_POSITIVE);
    for i in 0..s {
        for j in i + 1..s {
            if (k.get(i, j) - k.get(j, i)).abs() > 1e-10 * scale.max(1.0) {
                return Err(Error::invalid(format!(
                    "kernel is not symmetric at ({i}, {j})"
                )));
            }
        }
    }
    let mat = DMatrix::from_row_slice(s, s, k.entries());
    let eig = SymmetricEigen::try_new(mat.clone(), f64::EPSILON, 1000 * s.max(10))
        .ok_or(Error::EigenNonConvergence { residual: f64::NAN })?;

    let mut order: Vec<usize> = (0..s).collect();
    order.sort_by(|&a, &b| {
        eig.eigenvalues[b]
            .total_cmp(&eig.eigenvalues[a])
            .then(a.cmp(&b))
    });
    let eigenvalues: Vec<f64> = order.iter().map(|&c| eig.eigenvalues[c]).collect();
    let mut eigenvectors = vec![0.0; s * s];
    for (j, &c) in order.iter().enumerate() {
        let col = eig.eigenvectors.column(c);
        let mut pivot = 0;
        for i in 1..s {
            if col[i].abs() > col[pivot].abs() {
                pivot = i;
            }
        }
        let sign = if col[pivot] < 0.0 { -1.0 } else { 1.0 };
        for i in 0..s {
            eigenvectors[i * s + j] = sign * col[i];
        }
    }
    let sys = EigenSystem {
        size: s,
        eigenvalues,
        eigenvectors,
    };

    let residual = reconstruction_residual(k, &sys) / scale;
    if !(residual < 1e-8) {
        return Err(Error::EigenNonConvergence { residual });
    }
    Ok(sys)
}

/// `‖V·Λ·Vᵀ − K‖_max`.
pub fn reconstruction_residual(k: &KernelMatrix, eig: &EigenSystem) -> f64 {
    let s = eig.size;
    let v = DMatrix::from_row_slice(s, s, &eig.eigenvectors);
    let vl = DMatrix::from_fn(s, s, |i, j| v[(i, j)] * eig.eigenvalues[j]);
    let recon = vl * v.transpose();
    let mut worst: f64 = 0.0;
    for i in 0..s {
        for j in 0..s {
            worst = worst.max((recon[(i, j)] - k.get(i, j)).abs());
        }
    }
    worst
}

/// `‖V·Vᵀ − I‖_max`.
pub fn orthonormality_residual(eig: &EigenSystem) -> f64 {
    let s = eig.size;
    let v = DMatrix::from_row_slice(s, s, &eig.eigenvectors);
    let g = &v * v.transpose();
    let mut worst: f64 = 0.0;
    for i in 0..s {
        for j in 0..s {
            let target = if i == j { 1.0 } else { 0.0 };
            worst = worst.max((g[(i, j)] - target).abs());
        }
    }
    worst
}

/// Embedded samples `E_d′ = V[1..d′]·Λ[1..d′]^½`.
#[derive(Debug, Clone, PartialEq)]
pub struct Embedding {
    coords: DataMatrix,
    d_prime: usize,
    spectrum: Vec<f64>,
}

impl Embedding {
    pub fn coords(&self) -> &DataMatrix {
        &self.coords
    }

    pub fn d_prime(&self) -> usize {
        self.d_prime
    }

    pub fn n_points(&self) -> usize {
        self.coords.n_objects()
    }

    /// Normalized eigenvalues `λᵢ / λ₁` of the full kernel.
    pub fn spectrum(&self) -> &[f64] {
        &self.spectrum
    }

    /// Squared Euclidean distance between embedded points `i` and `j`.
    pub fn squared_distance(&self, i: usize, j: usize) -> f64 {
        crate::data::Dissimilarity::SquaredEuclidean.eval(self.coords.row(i), self.coords.row(j))
    }
}

pub fn embed(eig: &EigenSystem, d_prime: usize) -> Result<Embedding> {
    let s = eig.size;
    if d_prime == 0 || d_prime > s {
        return Err(Error::invalid(format!("d' = {d_prime} outside 1..={s}")));
    }
    if let Some(j) = (0..d_prime).find(|&j| eig.eigenvalues[j] < 0.0) {
        return Err(Error::invalid(format!(
            "eigenvalue {j} is negative ({:e}); clip the spectrum or lower d'",
            eig.eigenvalues[j]
        )));
    }
    let roots: Vec<f64> = eig.eigenvalues[..d_prime]
        .iter()
        .map(|l| l.sqrt())
        .collect();
    let mut coords = Vec::with_capacity(s * d_prime);
    for i in 0..s {
        for (j, r) in roots.iter().enumerate() {
            coords.push(eig.vector(i, j) * r);
        }
    }
    Ok(Embedding {
        coords: DataMatrix::new(s, d_prime, coords, None)?,
        d_prime,
        spectrum: eig.normalized_spectrum(),
    })
}

/// Elbow rule: the index `i` (1-based) with the largest drop `λᵢ − λᵢ₊₁` of
/// the normalized spectrum, searched over `i ≤ min(s − 1, max_dim)` and
/// `λᵢ > 1e-6·λ₁`. Ties go to the smallest index.
pub fn select_dimension(eig: &EigenSystem, max_dim: usize) -> Result<usize> {
    select_dimension_from_spectrum(eig.eigenvalues(), max_dim)
}

pub fn select_dimension_from_spectrum(eigenvalues: &[f64], max_dim: usize) -> Result<usize> {
    let top = eigenvalues.first().copied().unwrap_or(0.0);
    if !(top > 0.0) {
        return Err(Error::invalid("spectrum has no positive eigenvalue"));
    }
    let norm: Vec<f64> = eigenvalues.iter().map(|l| l / top).collect();
    let limit = (norm.len().saturating_sub(1)).min(max_dim);
    let mut best = 1;
    let mut best_drop = f64::NEG_INFINITY;
    for i in 1..=limit {
        if norm[i - 1] <= 1e-6 {
            continue;
        }
        let drop = norm[i - 1] - norm[i];
        if drop > best_drop {
            best_drop = drop;
            best = i;
        }
    }
    Ok(best)
}

/// Writes `index,normalized_eigenvalue,selected` rows (1-based index).
pub fn write_spectrum_csv<W: Write>(
    spectrum: &[f64],
    d_prime: usize,
    mut w: W,
) -> std::io::Result<()> {
    writeln!(w, "index,normalized_eigenvalue,selected")?;
    for (i, v) in spectrum.iter().enumerate() {
        writeln!(w, "{},{:?},{}", i + 1, v, u8::from(i + 1 == d_prime))?;
    }
    Ok(())
}
