//! External clustering scores from the contingency table: adjusted Rand index
//! (M1), adjusted mutual information (M2) and v-measure (M3).

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::clustering::ClusterLabels;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvalScores {
    pub m1_rand: f64,
    pub m2_mutual_info: f64,
    pub m3_v_measure: f64,
}

impl EvalScores {
    pub fn as_array(&self) -> [f64; 3] {
        [self.m1_rand, self.m2_mutual_info, self.m3_v_measure]
    }
}

/// Dense contingency counts between two labelings.
#[derive(Debug, Clone)]
pub struct Contingency {
    n: u64,
    rows: Vec<u64>,
    cols: Vec<u64>,
    /// `rows.len() × cols.len()` row-major.
    cells: Vec<u64>,
}

fn densify(labels: &[usize]) -> (Vec<usize>, usize) {
    let mut map = HashMap::new();
    let dense = labels
        .iter()
        .map(|l| {
            let next = map.len();
            *map.entry(*l).or_insert(next)
        })
        .collect();
    (dense, map.len())
}

impl Contingency {
    pub fn new(a: &[usize], b: &[usize]) -> Result<Self> {
        if a.len() != b.len() {
            return Err(Error::invalid(format!(
                "label vectors differ in length: {} vs {}",
                a.len(),
                b.len()
            )));
        }
        if a.is_empty() {
            return Err(Error::Empty("no labels to compare".into()));
        }
        let (da, ka) = densify(a);
        let (db, kb) = densify(b);
        let mut cells = vec![0u64; ka * kb];
        for (&i, &j) in da.iter().zip(&db) {
            cells[i * kb + j] += 1;
        }
        let mut rows = vec![0u64; ka];
        let mut cols = vec![0u64; kb];
        for i in 0..ka {
            for j in 0..kb {
                rows[i] += cells[i * kb + j];
                cols[j] += cells[i * kb + j];
            }
        }
        Ok(Self {
            n: a.len() as u64,
            rows,
            cols,
            cells,
        })
    }

    fn cell(&self, i: usize, j: usize) -> u64 {
        self.cells[i * self.cols.len() + j]
    }

    /// Every row and every column has exactly one non-zero cell.
    pub fn is_permutation(&self) -> bool {
        let kb = self.cols.len();
        self.rows.len() == kb
            && (0..self.rows.len()).all(|i| (0..kb).filter(|&j| self.cell(i, j) > 0).count() == 1)
            && (0..kb).all(|j| {
                (0..self.rows.len())
                    .filter(|&i| self.cell(i, j) > 0)
                    .count()
                    == 1
            })
    }
}

fn comb2(x: u64) -> f64 {
    (x as f64) * (x.saturating_sub(1) as f64) / 2.0
}

fn entropy(counts: &[u64], n: u64) -> f64 {
    let n = n as f64;
    counts
        .iter()
        .filter(|&&c| c > 0)
        .map(|&c| {
            let p = c as f64 / n;
            -p * p.ln()
        })
        .sum()
}

pub fn adjusted_rand_index(t: &Contingency) -> f64 {
    let index: f64 = t.cells.iter().map(|&c| comb2(c)).sum();
    let a: f64 = t.rows.iter().map(|&c| comb2(c)).sum();
    let b: f64 = t.cols.iter().map(|&c| comb2(c)).sum();
    let total = comb2(t.n);
    if total == 0.0 {
        return 1.0;
    }
    let expected = a * b / total;
    let max = 0.5 * (a + b);
    if max == expected {
        // both partitions trivial (all-in-one or all-singletons) and identical
        return 1.0;
    }
    (index - expected) / (max - expected)
}

pub fn mutual_information(t: &Contingency) -> f64 {
    let n = t.n as f64;
    let mut mi = 0.0;
    for (i, &a) in t.rows.iter().enumerate() {
        for (j, &b) in t.cols.iter().enumerate() {
            let c = t.cell(i, j);
            if c > 0 {
                let c = c as f64;
                mi += c / n * (n * c / (a as f64 * b as f64)).ln();
            }
        }
    }
    mi.max(0.0)
}

/// Expected mutual information under the hypergeometric model of random
/// labelings with the same marginals.
pub fn expected_mutual_information(t: &Contingency) -> f64 {
    let n = t.n as usize;
    let mut ln_fact = vec![0.0; n + 1];
    for k in 1..=n {
        ln_fact[k] = ln_fact[k - 1] + (k as f64).ln();
    }
    let nf = n as f64;
    let mut emi = 0.0;
    for &a in &t.rows {
        let a = a as usize;
        for &b in &t.cols {
            let b = b as usize;
            let lo = (a + b).saturating_sub(n).max(1);
            let hi = a.min(b);
            let common = ln_fact[a] + ln_fact[b] + ln_fact[n - a] + ln_fact[n - b] - ln_fact[n];
            for nij in lo..=hi {
                let x = nij as f64;
                let term = x / nf * (nf * x / (a as f64 * b as f64)).ln();
                let ln_p = common
                    - ln_fact[nij]
                    - ln_fact[a - nij]
                    - ln_fact[b - nij]
                    - ln_fact[n + nij - a - b];
                emi += term * ln_p.exp();
            }
        }
    }
    emi
}

/// AMI with max-entropy normalization.
pub fn adjusted_mutual_information(t: &Contingency) -> f64 {
    let (kr, kc) = (t.rows.len(), t.cols.len());
    let n = t.n as usize;
    if (kr == 1 && kc == 1) || (kr == n && kc == n) || t.is_permutation() {
        return 1.0;
    }
    let mi = mutual_information(t);
    let emi = expected_mutual_information(t);
    let h = entropy(&t.rows, t.n).max(entropy(&t.cols, t.n));
    let mut denom = h - emi;
    if denom.abs() < f64::EPSILON {
        denom = f64::EPSILON.copysign(denom);
    }
    (mi - emi) / denom
}

/// Conditional entropy of the row labeling given the column labeling.
fn conditional_entropy_rows_given_cols(t: &Contingency) -> f64 {
    let n = t.n as f64;
    let mut h = 0.0;
    for i in 0..t.rows.len() {
        for (j, &b) in t.cols.iter().enumerate() {
            let c = t.cell(i, j);
            if c > 0 {
                let c = c as f64;
                h -= c / n * (c / b as f64).ln();
            }
        }
    }
    h
}

fn conditional_entropy_cols_given_rows(t: &Contingency) -> f64 {
    let n = t.n as f64;
    let mut h = 0.0;
    for (i, &a) in t.rows.iter().enumerate() {
        for j in 0..t.cols.len() {
            let c = t.cell(i, j);
            if c > 0 {
                let c = c as f64;
                h -= c / n * (c / a as f64).ln();
            }
        }
    }
    h
}

/// `(homogeneity, completeness, v_measure)` with rows = truth, columns = prediction.
pub fn homogeneity_completeness_v(t: &Contingency) -> (f64, f64, f64) {
    let h_truth = entropy(&t.rows, t.n);
    let h_pred = entropy(&t.cols, t.n);
    let homogeneity = if h_truth == 0.0 {
        1.0
    } else {
        1.0 - conditional_entropy_rows_given_cols(t) / h_truth
    };
    let completeness = if h_pred == 0.0 {
        1.0
    } else {
        1.0 - conditional_entropy_cols_given_rows(t) / h_pred
    };
    let v = if homogeneity + completeness == 0.0 {
        0.0
    } else {
        2.0 * homogeneity * completeness / (homogeneity + completeness)
    };
    (homogeneity, completeness, v)
}

pub fn evaluate_labels(pred: &[usize], truth: &[usize]) -> Result<EvalScores> {
    let t = Contingency::new(truth, pred)?;
    Ok(EvalScores {
        m1_rand: adjusted_rand_index(&t),
        m2_mutual_info: adjusted_mutual_information(&t),
        m3_v_measure: homogeneity_completeness_v(&t).2,
    })
}

pub fn evaluate(pred: &ClusterLabels, truth: &ClusterLabels) -> Result<EvalScores> {
    evaluate_labels(pred.labels(), truth.labels())
}
