//! Diagonal-covariance Gaussian mixtures fitted by EM.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::data::{DataMatrix, Dissimilarity};
use crate::error::{Error, Result};
use crate::seeds::stream_seed;

use super::kmeans::kmeans_plus_plus;

pub const MAX_ITERATIONS: usize = 200;
pub const RELATIVE_TOLERANCE: f64 = 1e-7;
/// Variance floor as a fraction of the mean per-feature variance.
pub const COVARIANCE_FLOOR: f64 = 1e-6;

const LN_2PI: f64 = 1.837_877_066_409_345_5;

#[derive(Debug, Clone, PartialEq)]
pub struct GmmModel {
    pub n_components: usize,
    pub weights: Vec<f64>,
    /// `K × d` row-major.
    pub means: Vec<f64>,
    /// `K × d` row-major diagonal variances.
    pub variances: Vec<f64>,
    pub log_likelihood: f64,
    /// Total log-likelihood after each E-step.
    pub trace: Vec<f64>,
    pub floor: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GmmFit {
    pub model: GmmModel,
    pub labels: Vec<usize>,
    /// Traces of every restart, in restart order.
    pub restart_traces: Vec<Vec<f64>>,
    pub best_restart: usize,
    pub degenerate: bool,
}

impl GmmModel {
    fn log_component(&self, c: usize, x: &[f64]) -> f64 {
        let d = x.len();
        let mean = &self.means[c * d..(c + 1) * d];
        let var = &self.variances[c * d..(c + 1) * d];
        let mut acc = 0.0;
        for ((xi, mi), vi) in x.iter().zip(mean).zip(var) {
            let diff = xi - mi;
            acc += LN_2PI + vi.ln() + diff * diff / vi;
        }
        self.weights[c].ln() - 0.5 * acc
    }

    /// E-step: fills `resp` (`n × K`) and returns the total log-likelihood.
    fn e_step(&self, points: &DataMatrix, resp: &mut [f64]) -> f64 {
        let k = self.n_components;
        let mut total = 0.0;
        for i in 0..points.n_objects() {
            let row = &mut resp[i * k..(i + 1) * k];
            for (c, r) in row.iter_mut().enumerate() {
                *r = self.log_component(c, points.row(i));
            }
            let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let sum: f64 = row.iter().map(|v| (v - max).exp()).sum();
            let lse = max + sum.ln();
            row.iter_mut().for_each(|v| *v = (*v - lse).exp());
            debug_assert!((row.iter().sum::<f64>() - 1.0).abs() < 1e-10);
            total += lse;
        }
        total
    }

    /// M-step from responsibilities.
    fn m_step(&mut self, points: &DataMatrix, resp: &[f64]) {
        let (n, d, k) = (points.n_objects(), points.n_features(), self.n_components);
        let mut nk = vec![10.0 * f64::EPSILON; k];
        self.means.iter_mut().for_each(|v| *v = 0.0);
        for i in 0..n {
            let x = points.row(i);
            for c in 0..k {
                let r = resp[i * k + c];
                nk[c] += r;
                for (m, xi) in self.means[c * d..(c + 1) * d].iter_mut().zip(x) {
                    *m += r * xi;
                }
            }
        }
        for c in 0..k {
            self.means[c * d..(c + 1) * d]
                .iter_mut()
                .for_each(|m| *m /= nk[c]);
        }
        self.variances.iter_mut().for_each(|v| *v = 0.0);
        for i in 0..n {
            let x = points.row(i);
            for c in 0..k {
                let r = resp[i * k + c];
                for j in 0..d {
                    let diff = x[j] - self.means[c * d + j];
                    self.variances[c * d + j] += r * diff * diff;
                }
            }
        }
        for c in 0..k {
            for j in 0..d {
                let v = &mut self.variances[c * d + j];
                *v = (*v / nk[c]).max(self.floor);
            }
        }
        let total: f64 = nk.iter().sum();
        self.weights = nk.iter().map(|v| v / total).collect();
    }
}

fn mean_feature_variance(points: &DataMatrix) -> f64 {
    let (n, d) = (points.n_objects() as f64, points.n_features());
    let mut total = 0.0;
    for j in 0..d {
        let mean = (0..points.n_objects())
            .map(|i| points.row(i)[j])
            .sum::<f64>()
            / n;
        total += (0..points.n_objects())
            .map(|i| (points.row(i)[j] - mean).powi(2))
            .sum::<f64>()
            / n;
    }
    total / d as f64
}

fn fit_once(points: &DataMatrix, k: usize, floor: f64, seed: u64) -> (GmmModel, Vec<f64>) {
    let (n, d) = (points.n_objects(), points.n_features());
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let centers = kmeans_plus_plus(points, k, &mut rng);
    let f = Dissimilarity::SquaredEuclidean;
    let mut resp = vec![0.0; n * k];
    for i in 0..n {
        let nearest = (0..k)
            .min_by(|&a, &b| {
                f.eval(points.row(i), points.row(centers[a]))
                    .total_cmp(&f.eval(points.row(i), points.row(centers[b])))
            })
            .expect("k >= 1");
        resp[i * k + nearest] = 1.0;
    }
    let mut model = GmmModel {
        n_components: k,
        weights: vec![1.0 / k as f64; k],
        means: vec![0.0; k * d],
        variances: vec![0.0; k * d],
        log_likelihood: f64::NEG_INFINITY,
        trace: Vec::new(),
        floor,
    };
    model.m_step(points, &resp);
    for _ in 0..MAX_ITERATIONS {
        let ll = model.e_step(points, &mut resp);
        let prev = model.log_likelihood;
        model.trace.push(ll);
        model.log_likelihood = ll;
        if prev.is_finite() && (ll - prev).abs() <= RELATIVE_TOLERANCE * prev.abs() {
            break;
        }
        model.m_step(points, &resp);
    }
    (model, resp)
}

/// Fits `restarts` independent EM runs and keeps the one with the highest
/// final log-likelihood. Each restart draws from its own seed stream.
pub fn gmm_fit(points: &DataMatrix, k: usize, restarts: usize, seed: u64) -> Result<GmmFit> {
    let n = points.n_objects();
    if k == 0 || k > n {
        return Err(Error::invalid(format!("GMM with k={k} on {n} points")));
    }
    let mean_var = mean_feature_variance(points);
    if !(mean_var > 0.0) {
        log::warn!("all {n} points are identical; returning a single cluster");
        let d = points.n_features();
        return Ok(GmmFit {
            model: GmmModel {
                n_components: 1,
                weights: vec![1.0],
                means: points.row(0).to_vec(),
                variances: vec![0.0; d],
                log_likelihood: f64::NAN,
                trace: Vec::new(),
                floor: 0.0,
            },
            labels: vec![0; n],
            restart_traces: Vec::new(),
            best_restart: 0,
            degenerate: true,
        });
    }
    let floor = COVARIANCE_FLOOR * mean_var;
    let mut best: Option<(GmmModel, Vec<f64>, usize)> = None;
    let mut traces = Vec::with_capacity(restarts.max(1));
    for r in 0..restarts.max(1) {
        let (model, resp) = fit_once(points, k, floor, stream_seed(seed, r as u64));
        traces.push(model.trace.clone());
        let better = best
            .as_ref()
            .is_none_or(|(b, _, _)| model.log_likelihood > b.log_likelihood);
        if better {
            best = Some((model, resp, r));
        }
    }
    let (model, resp, best_restart) = best.expect("at least one restart");
    let labels = (0..n)
        .map(|i| {
            let row = &resp[i * k..(i + 1) * k];
            (0..k)
                .max_by(|&a, &b| row[a].total_cmp(&row[b]).then(b.cmp(&a)))
                .expect("k >= 1")
        })
        .collect();
    Ok(GmmFit {
        model,
        labels,
        restart_traces: traces,
        best_restart,
        degenerate: false,
    })
}
