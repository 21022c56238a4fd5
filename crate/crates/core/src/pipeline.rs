//! End-to-end runs: load, sample, compute `M_s`, embed, cluster, extend
//! labels, evaluate. Also the sweep driver that tabulates many runs.

use std::fmt;
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::clustering::{
    extend_labels, gmm_fit_predict, kmeans_fit_predict, write_labels_csv, ClusterLabels,
};
use crate::data::{generate_synthetic, load_csv, DataMatrix, Dissimilarity, SyntheticKind};
use crate::default_sample_count;
use crate::embedding::{
    eigendecompose, embed, select_dimension, to_mercer_kernel, write_spectrum_csv, DEFAULT_MAX_DIM,
};
use crate::error::{Error, Result};
use crate::evaluation::{evaluate_labels, EvalScores};
use crate::memory::{MemoryReport, MemoryTracker};
use crate::minimax::{
    minimax_from_mst_with_cap, prim_incremental_tracked, MinimaxMatrix, DENSE_CAP,
};
use crate::sampling::{
    dpp_sample_with, kmeans_sample_with, mm_sample_tracked, random_sample_with,
    sample_minimax_tracked, SampleSet, SamplerKind, DPP_CAP,
};
use crate::seeds::{stage_seed, stream_seed, Stage};

/// A sampler, or `none` for the quadratic all-objects baseline.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SamplerChoice {
    Mm,
    Kmeans,
    Dpp,
    Random,
    None,
}

impl SamplerChoice {
    pub fn as_str(self) -> &'static str {
        match self {
            SamplerChoice::Mm => "mm",
            SamplerChoice::Kmeans => "kmeans",
            SamplerChoice::Dpp => "dpp",
            SamplerChoice::Random => "random",
            SamplerChoice::None => "none",
        }
    }
}

impl fmt::Display for SamplerChoice {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SamplerChoice {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "none" => Ok(Self::None),
            other => Ok(match other.parse::<SamplerKind>()? {
                SamplerKind::Mm => Self::Mm,
                SamplerKind::Kmeans => Self::Kmeans,
                SamplerKind::Dpp => Self::Dpp,
                SamplerKind::Random => Self::Random,
            }),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ClustererKind {
    #[default]
    Gmm,
    Kmeans,
}

impl FromStr for ClustererKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "gmm" => Ok(Self::Gmm),
            "kmeans" => Ok(Self::Kmeans),
            other => Err(Error::invalid(format!("unknown clusterer `{other}`"))),
        }
    }
}

fn default_max_dim() -> usize {
    DEFAULT_MAX_DIM
}

fn default_restarts() -> usize {
    10
}

fn default_dense_cap() -> usize {
    DENSE_CAP
}

fn default_dpp_cap() -> usize {
    DPP_CAP
}

/// One pipeline run.
///
/// `dataset` is a CSV path or `gen:<kind>:<n>[:<data_seed>]` with kind
/// `two_blobs` or `three_spirals`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub dataset: String,
    #[serde(default)]
    pub label_col: Option<String>,
    pub sampler: SamplerChoice,
    #[serde(default)]
    pub clusterer: ClustererKind,
    pub k: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub num_samples: Option<usize>,
    #[serde(default)]
    pub standardize: bool,
    #[serde(default = "default_max_dim")]
    pub max_dim: usize,
    #[serde(default = "default_restarts")]
    pub restarts: usize,
    /// Artifact directory; nothing is written when absent.
    #[serde(default)]
    pub output: Option<PathBuf>,
    #[serde(default = "default_dense_cap")]
    pub dense_cap: usize,
    /// Lifts `dense_cap` for `sampler = none`.
    #[serde(default)]
    pub allow_dense: bool,
    #[serde(default = "default_dpp_cap")]
    pub dpp_cap: usize,
}

impl RunConfig {
    pub fn new(dataset: impl Into<String>, sampler: SamplerChoice, k: usize, seed: u64) -> Self {
        Self {
            dataset: dataset.into(),
            label_col: None,
            sampler,
            clusterer: ClustererKind::Gmm,
            k,
            seed,
            num_samples: None,
            standardize: false,
            max_dim: DEFAULT_MAX_DIM,
            restarts: default_restarts(),
            output: None,
            dense_cap: DENSE_CAP,
            allow_dense: false,
            dpp_cap: DPP_CAP,
        }
    }
}

/// Contents of `result.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunResult {
    pub dataset: String,
    pub sampler: SamplerChoice,
    pub seed: u64,
    pub n_objects: usize,
    pub n_samples: usize,
    pub d_prime: usize,
    pub m1: Option<f64>,
    pub m2: Option<f64>,
    pub m3: Option<f64>,
    pub peak_aux_entries: usize,
    pub memory: MemoryReport,
    pub config: RunConfig,
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub result: RunResult,
    /// `None` when the dataset carries no labels.
    pub scores: Option<EvalScores>,
    pub memory: MemoryReport,
    pub labels: ClusterLabels,
    pub samples: Option<SampleSet>,
    pub spectrum: Vec<f64>,
}

/// Loads a CSV path or a `gen:` spec.
pub fn load_dataset(spec: &str, label_col: Option<&str>) -> Result<DataMatrix> {
    let Some(rest) = spec.strip_prefix("gen:") else {
        return load_csv(spec, label_col);
    };
    let parts: Vec<&str> = rest.split(':').collect();
    if !(2..=3).contains(&parts.len()) {
        return Err(Error::invalid(format!(
            "generator spec `{spec}` should be gen:<kind>:<n>[:<seed>]"
        )));
    }
    let kind: SyntheticKind = parts[0].parse()?;
    let n: usize = parts[1]
        .parse()
        .map_err(|_| Error::invalid(format!("bad object count `{}`", parts[1])))?;
    let data_seed: u64 = match parts.get(2) {
        Some(s) => s
            .parse()
            .map_err(|_| Error::invalid(format!("bad data seed `{s}`")))?,
        None => 0,
    };
    generate_synthetic(kind, n, data_seed)
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> Error + '_ {
    move |source| Error::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    File::create(path).map(BufWriter::new).map_err(io_err(path))
}

/// Samples and `M_s` for the sampler in `config`; `None` runs on all objects.
fn sample_stage(
    config: &RunConfig,
    data: &DataMatrix,
    f: Dissimilarity,
    tracker: &mut MemoryTracker,
) -> Result<(Option<SampleSet>, MinimaxMatrix)> {
    let n = data.n_objects();
    let s = config
        .num_samples
        .unwrap_or_else(|| default_sample_count(n));
    let prim_seed = stage_seed(config.seed, Stage::PrimStart);
    let sampler_seed = stage_seed(config.seed, Stage::Sampler);
    let reps_seed = stage_seed(config.seed, Stage::Representatives);
    let with_reps = |set: SampleSet, tracker: &mut MemoryTracker| {
        tracker.set("samples.subset_id", n);
        let m =
            sample_minimax_tracked(&set, f, reps_seed, tracker).map_err(|e| e.in_stage("ms"))?;
        Ok((Some(set), m))
    };
    match config.sampler {
        SamplerChoice::None => {
            let cap = if config.allow_dense {
                usize::MAX
            } else {
                config.dense_cap
            };
            if n > cap {
                return Err(Error::CapExceeded {
                    what: "all-objects baseline",
                    size: n,
                    cap,
                }
                .in_stage("sampling"));
            }
            let mst = prim_incremental_tracked(data, f, prim_seed, tracker)
                .map_err(|e| e.in_stage("mst"))?;
            let m = minimax_from_mst_with_cap(&mst, cap).map_err(|e| e.in_stage("minimax"))?;
            tracker.set("m", n * n);
            drop(mst);
            tracker.release("mst.edges");
            Ok((None, m))
        }
        SamplerChoice::Mm => {
            let mut mst = prim_incremental_tracked(data, f, prim_seed, tracker)
                .map_err(|e| e.in_stage("mst"))?;
            let (mut set, m) =
                mm_sample_tracked(&mut mst, s, tracker).map_err(|e| e.in_stage("sampling"))?;
            drop(mst);
            tracker.release("mst.edges");
            set.seed = sampler_seed;
            Ok((Some(set), m))
        }
        SamplerChoice::Kmeans => {
            let set =
                kmeans_sample_with(data, f, s, sampler_seed).map_err(|e| e.in_stage("sampling"))?;
            with_reps(set, tracker)
        }
        SamplerChoice::Dpp => {
            let set = dpp_sample_with(data, f, s, sampler_seed, config.dpp_cap)
                .map_err(|e| e.in_stage("sampling"))?;
            with_reps(set, tracker)
        }
        SamplerChoice::Random => {
            let set =
                random_sample_with(data, f, s, sampler_seed).map_err(|e| e.in_stage("sampling"))?;
            with_reps(set, tracker)
        }
    }
}

/// Runs one configuration and writes its artifacts when `config.output` is set.
pub fn run_pipeline(config: &RunConfig) -> Result<RunOutcome> {
    let mut data = load_dataset(&config.dataset, config.label_col.as_deref())
        .map_err(|e| e.in_stage("load"))?;
    if config.standardize {
        data = data.standardized();
    }
    let n = data.n_objects();
    if config.k == 0 {
        return Err(Error::invalid("k must be at least 1").in_stage("config"));
    }
    let f = Dissimilarity::SquaredEuclidean;
    let mut tracker = MemoryTracker::new();

    let (samples, m_s) = sample_stage(config, &data, f, &mut tracker)?;
    let s = m_s.size();

    let kernel = to_mercer_kernel(&m_s).map_err(|e| e.in_stage("embedding"))?;
    tracker.set("kernel", s * s);
    drop(m_s);
    tracker.release("ms");
    tracker.release("m");
    let mut eig = eigendecompose(&kernel).map_err(|e| e.in_stage("embedding"))?;
    tracker.set("eigen", s * s + s);
    drop(kernel);
    tracker.release("kernel");
    let clip = eig.clip_negatives();
    if clip.significant_negatives > 0 {
        log::warn!(
            "{} eigenvalues below -{:e}·λ₁ (negative mass ratio {:e})",
            clip.significant_negatives,
            crate::embedding::CLIP_TOLERANCE,
            clip.negative_mass_ratio
        );
    }
    let d_prime = select_dimension(&eig, config.max_dim).map_err(|e| e.in_stage("embedding"))?;
    let embedding = embed(&eig, d_prime).map_err(|e| e.in_stage("embedding"))?;
    tracker.set("embedding", s * d_prime);
    drop(eig);
    tracker.release("eigen");
    log::info!("embedded {s} samples in {d_prime} dimensions");

    let cluster_seed = stage_seed(config.seed, Stage::Clustering);
    let sample_labels = match config.clusterer {
        ClustererKind::Gmm => gmm_fit_predict(&embedding, config.k, config.restarts, cluster_seed),
        ClustererKind::Kmeans => kmeans_fit_predict(&embedding, config.k, cluster_seed),
    }
    .map_err(|e| e.in_stage("clustering"))?;
    let labels = match &samples {
        Some(set) => extend_labels(&sample_labels, set).map_err(|e| e.in_stage("extension"))?,
        None => sample_labels,
    };
    tracker.set("labels", n);
    let spectrum = embedding.spectrum().to_vec();
    drop(embedding);
    tracker.release("embedding");

    let scores = data
        .labels()
        .map(|truth| evaluate_labels(labels.labels(), truth))
        .transpose()
        .map_err(|e| e.in_stage("evaluation"))?;
    let memory = tracker.report(n);
    let result = RunResult {
        dataset: config.dataset.clone(),
        sampler: config.sampler,
        seed: config.seed,
        n_objects: n,
        n_samples: s,
        d_prime,
        m1: scores.map(|x| x.m1_rand),
        m2: scores.map(|x| x.m2_mutual_info),
        m3: scores.map(|x| x.m3_v_measure),
        peak_aux_entries: memory.peak_aux_entries,
        memory,
        config: config.clone(),
    };
    let outcome = RunOutcome {
        result,
        scores,
        memory,
        labels,
        samples,
        spectrum,
    };
    if let Some(dir) = &config.output {
        write_artifacts(&outcome, data.labels(), dir).map_err(|e| e.in_stage("output"))?;
    }
    Ok(outcome)
}

/// Writes `result.json`, `labels.csv`, `spectrum.csv` and, for sampled runs,
/// `samples.json` into `dir`.
pub fn write_artifacts(outcome: &RunOutcome, truth: Option<&[usize]>, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(io_err(dir))?;

    let path = dir.join("result.json");
    let mut w = create(&path)?;
    serde_json::to_writer_pretty(&mut w, &outcome.result)?;
    writeln!(w).and_then(|_| w.flush()).map_err(io_err(&path))?;

    let path = dir.join("labels.csv");
    let mut w = create(&path)?;
    write_labels_csv(&outcome.labels, truth, &mut w)
        .and_then(|_| w.flush())
        .map_err(io_err(&path))?;

    let path = dir.join("spectrum.csv");
    let mut w = create(&path)?;
    write_spectrum_csv(&outcome.spectrum, outcome.result.d_prime, &mut w)
        .and_then(|_| w.flush())
        .map_err(io_err(&path))?;

    if let Some(set) = &outcome.samples {
        let path = dir.join("samples.json");
        let mut w = create(&path)?;
        serde_json::to_writer(&mut w, &set.to_json())?;
        writeln!(w).and_then(|_| w.flush()).map_err(io_err(&path))?;
    }
    Ok(())
}

/// A list of runs plus optional sweep-wide settings.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SweepConfig {
    /// Per-cell artifacts go to `<out>/<index>_<sampler>/`; `table.csv` to `<out>`.
    #[serde(default)]
    pub out: Option<PathBuf>,
    /// When set, cell `i` runs with `stream_seed(seed, i)` instead of its own seed.
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub runs: Vec<RunConfig>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub dataset: String,
    pub sampler: SamplerChoice,
    pub seed: u64,
    pub status: String,
    pub m1: Option<f64>,
    pub m2: Option<f64>,
    pub m3: Option<f64>,
    pub d_prime: Option<usize>,
}

/// Runs every cell; a failing cell becomes an `error: ...` row and the sweep
/// continues.
pub fn run_sweep(sweep: &SweepConfig) -> Result<Vec<SweepRow>> {
    let mut rows = Vec::with_capacity(sweep.runs.len());
    for (i, run) in sweep.runs.iter().enumerate() {
        let mut cfg = run.clone();
        if let Some(seed) = sweep.seed {
            cfg.seed = stream_seed(seed, i as u64);
        }
        if let Some(out) = &sweep.out {
            cfg.output = Some(out.join(format!("{i:03}_{}", cfg.sampler)));
        }
        let row = match run_pipeline(&cfg) {
            Ok(o) => SweepRow {
                dataset: cfg.dataset.clone(),
                sampler: cfg.sampler,
                seed: cfg.seed,
                status: "ok".into(),
                m1: o.result.m1,
                m2: o.result.m2,
                m3: o.result.m3,
                d_prime: Some(o.result.d_prime),
            },
            Err(e) => {
                log::error!(
                    "sweep cell {i} ({}, {}) failed: {e}",
                    cfg.dataset,
                    cfg.sampler
                );
                SweepRow {
                    dataset: cfg.dataset.clone(),
                    sampler: cfg.sampler,
                    seed: cfg.seed,
                    status: format!("error: {e}"),
                    m1: None,
                    m2: None,
                    m3: None,
                    d_prime: None,
                }
            }
        };
        rows.push(row);
    }
    if let Some(out) = &sweep.out {
        fs::create_dir_all(out).map_err(io_err(out))?;
        let path = out.join("table.csv");
        write_sweep_csv(&rows, create(&path)?)?;
    }
    Ok(rows)
}

pub fn write_sweep_csv<W: Write>(rows: &[SweepRow], w: W) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(w);
    let io = |e: csv::Error| Error::invalid(format!("csv write failed: {e}"));
    wtr.write_record([
        "dataset", "sampler", "seed", "status", "m1", "m2", "m3", "d_prime",
    ])
    .map_err(io)?;
    let opt = |x: Option<f64>| x.map(|v| format!("{v:.6}")).unwrap_or_default();
    for r in rows {
        wtr.write_record([
            r.dataset.clone(),
            r.sampler.to_string(),
            r.seed.to_string(),
            r.status.clone(),
            opt(r.m1),
            opt(r.m2),
            opt(r.m3),
            r.d_prime.map(|d| d.to_string()).unwrap_or_default(),
        ])
        .map_err(io)?;
    }
    wtr.flush()
        .map_err(|e| Error::invalid(format!("csv flush failed: {e}")))?;
    Ok(())
}
