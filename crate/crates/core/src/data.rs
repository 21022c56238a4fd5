//! Dataset ingestion, synthetic generators and the base dissimilarity `f`.

use std::collections::HashMap;
use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;
use std::str::FromStr;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// `N` objects with `D` real features each, plus optional ground-truth labels.
#[derive(Debug, Clone, PartialEq)]
pub struct DataMatrix {
    n_objects: usize,
    n_features: usize,
    values: Vec<f64>,
    labels: Option<Vec<usize>>,
}

impl DataMatrix {
    /// Builds a matrix from row-major `values`.
    pub fn new(
        n_objects: usize,
        n_features: usize,
        values: Vec<f64>,
        labels: Option<Vec<usize>>,
    ) -> Result<Self> {
        if n_objects == 0 || n_features == 0 {
            return Err(Error::Empty(
                "data matrix needs at least one row and column".into(),
            ));
        }
        if values.len() != n_objects * n_features {
            return Err(Error::invalid(format!(
                "expected {} values for a {n_objects}x{n_features} matrix, got {}",
                n_objects * n_features,
                values.len()
            )));
        }
        if let Some(pos) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::invalid(format!(
                "non-finite value at row {}, column {}",
                pos / n_features,
                pos % n_features
            )));
        }
        if let Some(l) = &labels {
            if l.len() != n_objects {
                return Err(Error::invalid(format!(
                    "label vector has length {} but there are {n_objects} objects",
                    l.len()
                )));
            }
        }
        Ok(Self {
            n_objects,
            n_features,
            values,
            labels,
        })
    }

    /// Builds a matrix from a slice of rows of equal width.
    pub fn from_rows(rows: &[Vec<f64>], labels: Option<Vec<usize>>) -> Result<Self> {
        let d = rows.first().map(Vec::len).unwrap_or(0);
        if let Some(bad) = rows.iter().position(|r| r.len() != d) {
            return Err(Error::invalid(format!("row {bad} has a different width")));
        }
        Self::new(rows.len(), d, rows.concat(), labels)
    }

    pub fn n_objects(&self) -> usize {
        self.n_objects
    }

    pub fn n_features(&self) -> usize {
        self.n_features
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.n_features..(i + 1) * self.n_features]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn labels(&self) -> Option<&[usize]> {
        self.labels.as_deref()
    }

    /// Number of distinct ground-truth labels, if labels are present.
    pub fn n_classes(&self) -> Option<usize> {
        self.labels
            .as_ref()
            .map(|l| l.iter().copied().max().map_or(0, |m| m + 1))
    }

    /// Returns a copy with every feature z-scored. Constant features are only centered.
    pub fn standardized(&self) -> Self {
        let n = self.n_objects as f64;
        let d = self.n_features;
        let mut mean = vec![0.0; d];
        for i in 0..self.n_objects {
            for (m, x) in mean.iter_mut().zip(self.row(i)) {
                *m += x;
            }
        }
        mean.iter_mut().for_each(|m| *m /= n);
        let mut var = vec![0.0; d];
        for i in 0..self.n_objects {
            for ((v, x), m) in var.iter_mut().zip(self.row(i)).zip(&mean) {
                *v += (x - m) * (x - m);
            }
        }
        let scale: Vec<f64> = var
            .iter()
            .map(|v| {
                let sd = (v / n).sqrt();
                if sd > 0.0 {
                    sd
                } else {
                    1.0
                }
            })
            .collect();
        let values = self
            .values
            .chunks(d)
            .flat_map(|row| {
                row.iter()
                    .zip(&mean)
                    .zip(&scale)
                    .map(|((x, m), s)| (x - m) / s)
                    .collect::<Vec<_>>()
            })
            .collect();
        Self {
            values,
            ..self.clone()
        }
    }
}

/// The base pairwise dissimilarity `f`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Dissimilarity {
    #[default]
    SquaredEuclidean,
}

impl Dissimilarity {
    #[inline]
    pub fn eval(self, a: &[f64], b: &[f64]) -> f64 {
        match self {
            Dissimilarity::SquaredEuclidean => a
                .iter()
                .zip(b)
                .map(|(x, y)| {
                    let d = x - y;
                    d * d
                })
                .sum(),
        }
    }

    /// `f(i, j)` between two objects of `data`.
    pub fn between(self, data: &DataMatrix, i: usize, j: usize) -> Result<f64> {
        let n = data.n_objects();
        for idx in [i, j] {
            if idx >= n {
                return Err(Error::IndexOutOfRange { index: idx, len: n });
            }
        }
        Ok(self.eval(data.row(i), data.row(j)))
    }
}

/// Squared Euclidean dissimilarity between objects `i` and `j`.
pub fn dissimilarity(data: &DataMatrix, i: usize, j: usize) -> Result<f64> {
    Dissimilarity::SquaredEuclidean.between(data, i, j)
}

/// Parses a header-first CSV. The optional `label_column` is factor-encoded to
/// `0..K` in first-appearance order and removed from the features.
pub fn read_csv<R: Read>(reader: R, label_column: Option<&str>) -> Result<DataMatrix> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let headers = rdr
        .headers()
        .map_err(|e| csv_error(e, 1))?
        .iter()
        .map(str::to_owned)
        .collect::<Vec<_>>();
    let label_idx = match label_column {
        Some(name) => Some(headers.iter().position(|h| h == name).ok_or_else(|| {
            Error::invalid(format!(
                "label column `{name}` not found in header {headers:?}"
            ))
        })?),
        None => None,
    };
    let n_features = headers.len() - usize::from(label_idx.is_some());
    if n_features == 0 {
        return Err(Error::Empty("no feature columns".into()));
    }

    let mut values = Vec::new();
    let mut labels = Vec::new();
    let mut codes: HashMap<String, usize> = HashMap::new();
    let mut n_rows = 0;
    for (r, record) in rdr.records().enumerate() {
        // header is line 1
        let line = r + 2;
        let record = record.map_err(|e| csv_error(e, line))?;
        if record.len() != headers.len() {
            return Err(Error::Parse {
                row: line,
                column: "*".into(),
                message: format!("expected {} fields, found {}", headers.len(), record.len()),
            });
        }
        for (c, cell) in record.iter().enumerate() {
            if Some(c) == label_idx {
                let next = codes.len();
                labels.push(*codes.entry(cell.to_owned()).or_insert(next));
                continue;
            }
            let v = f64::from_str(cell)
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| Error::Parse {
                    row: line,
                    column: headers[c].clone(),
                    message: format!("`{cell}` is not a finite real"),
                })?;
            values.push(v);
        }
        n_rows += 1;
    }
    if n_rows == 0 {
        return Err(Error::Empty("csv has no data rows".into()));
    }
    DataMatrix::new(n_rows, n_features, values, label_idx.map(|_| labels))
}

fn csv_error(e: csv::Error, line: usize) -> Error {
    let row = e.position().map_or(line, |p| p.line() as usize);
    Error::Parse {
        row,
        column: "*".into(),
        message: e.to_string(),
    }
}

/// Loads a dataset from a CSV file (see [`read_csv`]).
pub fn load_csv(path: impl AsRef<Path>, label_column: Option<&str>) -> Result<DataMatrix> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|source| Error::Io {
        path: path.to_owned(),
        source,
    })?;
    read_csv(file, label_column)
}

/// Writes features as `x0..x{D-1}` and, when present, labels as a trailing `label` column.
pub fn write_csv<W: Write>(data: &DataMatrix, writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    let mut header: Vec<String> = (0..data.n_features()).map(|j| format!("x{j}")).collect();
    if data.labels().is_some() {
        header.push("label".into());
    }
    let to_err = |e: csv::Error| Error::invalid(e.to_string());
    w.write_record(&header).map_err(to_err)?;
    for i in 0..data.n_objects() {
        let mut rec: Vec<String> = data.row(i).iter().map(|v| format!("{v:?}")).collect();
        if let Some(l) = data.labels() {
            rec.push(l[i].to_string());
        }
        w.write_record(&rec).map_err(to_err)?;
    }
    w.flush().map_err(|e| Error::invalid(e.to_string()))
}

pub fn save_csv(data: &DataMatrix, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|source| Error::Io {
        path: path.to_owned(),
        source,
    })?;
    write_csv(data, file)
}

/// Built-in synthetic datasets.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SyntheticKind {
    /// Two isotropic unit-variance Gaussian blobs with centers 20 apart.
    TwoBlobs,
    /// Three interleaved Archimedean spiral arms.
    ThreeSpirals,
}

impl SyntheticKind {
    pub fn n_clusters(self) -> usize {
        match self {
            SyntheticKind::TwoBlobs => 2,
            SyntheticKind::ThreeSpirals => 3,
        }
    }
}

impl FromStr for SyntheticKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "two_blobs" => Ok(Self::TwoBlobs),
            "three_spirals" => Ok(Self::ThreeSpirals),
            other => Err(Error::invalid(format!(
                "unknown synthetic dataset `{other}`"
            ))),
        }
    }
}

/// Generates a labelled synthetic dataset, deterministic in `seed`.
pub fn generate_synthetic(kind: SyntheticKind, n: usize, seed: u64) -> Result<DataMatrix> {
    let k = kind.n_clusters();
    if n < 3 * k {
        return Err(Error::invalid(format!(
            "{kind:?} needs at least {} objects, got {n}",
            3 * k
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let sizes: Vec<usize> = (0..k).map(|c| n / k + usize::from(c < n % k)).collect();
    let mut values = Vec::with_capacity(2 * n);
    let mut labels = Vec::with_capacity(n);
    match kind {
        SyntheticKind::TwoBlobs => {
            let noise = Normal::new(0.0, 1.0).expect("unit normal");
            for (c, &size) in sizes.iter().enumerate() {
                let cx = 20.0 * c as f64;
                for _ in 0..size {
                    values.push(cx + noise.sample(&mut rng));
                    values.push(noise.sample(&mut rng));
                    labels.push(c);
                }
            }
        }
        SyntheticKind::ThreeSpirals => {
            // r = θ/π·SCALE; adjacent arms sit 2/3·SCALE apart radially.
            const SCALE: f64 = 3.0;
            const T_START: f64 = std::f64::consts::PI;
            const T_END: f64 = 4.0 * std::f64::consts::PI;
            let noise = Normal::new(0.0, 0.1).expect("valid sigma");
            for (c, &size) in sizes.iter().enumerate() {
                let phase = 2.0 * std::f64::consts::PI * c as f64 / k as f64;
                for p in 0..size {
                    let t = T_START + (T_END - T_START) * p as f64 / (size - 1) as f64;
                    let r = SCALE * t / std::f64::consts::PI;
                    values.push(r * (t + phase).cos() + noise.sample(&mut rng));
                    values.push(r * (t + phase).sin() + noise.sample(&mut rng));
                    labels.push(c);
                }
            }
        }
    }
    DataMatrix::new(n, 2, values, Some(labels))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn csv_with_label_column() {
        let data = read_csv("x,y,lab\n0,0,a\n1,1,b".as_bytes(), Some("lab")).unwrap();
        assert_eq!(data.n_objects(), 2);
        assert_eq!(data.n_features(), 2);
        assert_eq!(data.labels(), Some(&[0, 1][..]));
        assert_eq!(data.row(1), &[1.0, 1.0]);
    }

    #[test]
    fn label_encoding_is_first_appearance() {
        let data = read_csv("lab,x\nz,1\na,2\nz,3\nm,4".as_bytes(), Some("lab")).unwrap();
        assert_eq!(data.labels(), Some(&[0, 1, 0, 2][..]));
        assert_eq!(data.n_classes(), Some(3));
    }

    #[test]
    fn non_numeric_cell_names_location() {
        let err = read_csv("x,y\n1,2\n3,abc".as_bytes(), None).unwrap_err();
        match err {
            Error::Parse {
                row,
                column,
                message,
            } => {
                assert_eq!(row, 3);
                assert_eq!(column, "y");
                assert!(message.contains("abc"));
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn empty_and_ragged_inputs_fail() {
        assert!(matches!(
            read_csv("x,y\n".as_bytes(), None),
            Err(Error::Empty(_))
        ));
        assert!(matches!(
            read_csv("".as_bytes(), None),
            Err(Error::Empty(_))
        ));
        assert!(read_csv("x,y\n1,2\n3".as_bytes(), None).is_err());
        assert!(read_csv("x,y\n1,nan".as_bytes(), None).is_err());
        assert!(read_csv("x,y\n1,2".as_bytes(), Some("nope")).is_err());
    }

    #[test]
    fn three_four_five() {
        let data = DataMatrix::from_rows(&[vec![0.0, 0.0], vec![3.0, 4.0]], None).unwrap();
        assert_eq!(dissimilarity(&data, 0, 1).unwrap(), 25.0);
        assert_eq!(dissimilarity(&data, 1, 1).unwrap(), 0.0);
        assert!(matches!(
            dissimilarity(&data, 0, 2),
            Err(Error::IndexOutOfRange { index: 2, len: 2 })
        ));
    }

    #[test]
    fn dissimilarity_matches_naive_loop() {
        let data = generate_synthetic(SyntheticKind::TwoBlobs, 6, 11).unwrap();
        for i in 0..data.n_objects() {
            for j in 0..data.n_objects() {
                let mut naive = 0.0;
                for d in 0..data.n_features() {
                    let a = data.values()[i * data.n_features() + d];
                    let b = data.values()[j * data.n_features() + d];
                    naive += (a - b) * (a - b);
                }
                assert!((dissimilarity(&data, i, j).unwrap() - naive).abs() <= 1e-12);
            }
        }
    }

    #[test]
    fn synthetic_is_deterministic() {
        let a = generate_synthetic(SyntheticKind::TwoBlobs, 10, 7).unwrap();
        let b = generate_synthetic(SyntheticKind::TwoBlobs, 10, 7).unwrap();
        assert!(a
            .values()
            .iter()
            .zip(b.values())
            .all(|(x, y)| x.to_bits() == y.to_bits()));
        assert_eq!(a.labels(), b.labels());
        assert_ne!(
            a,
            generate_synthetic(SyntheticKind::TwoBlobs, 10, 8).unwrap()
        );
    }

    #[test]
    fn spirals_have_three_full_arms() {
        let data = generate_synthetic(SyntheticKind::ThreeSpirals, 312, 0).unwrap();
        let labels = data.labels().unwrap();
        let mut counts = [0usize; 3];
        labels.iter().for_each(|&l| counts[l] += 1);
        assert!(counts.iter().all(|&c| c >= 100), "{counts:?}");
        assert_eq!(data.n_classes(), Some(3));
    }

    #[test]
    fn synthetic_rejects_bad_requests() {
        assert!(generate_synthetic(SyntheticKind::ThreeSpirals, 8, 0).is_err());
        assert!("four_moons".parse::<SyntheticKind>().is_err());
    }

    // Single-linkage oracle: cut the dendrogram at two clusters by removing
    // the heaviest edge of a brute-force Kruskal MST.
    #[test]
    fn blobs_are_single_linkage_separable() {
        let data = generate_synthetic(SyntheticKind::TwoBlobs, 60, 5).unwrap();
        let n = data.n_objects();
        let mut edges = Vec::new();
        for i in 0..n {
            for j in i + 1..n {
                edges.push((dissimilarity(&data, i, j).unwrap(), i, j));
            }
        }
        edges.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut comp: Vec<usize> = (0..n).collect();
        let mut merges = 0;
        for (_, i, j) in edges {
            let (ci, cj) = (comp[i], comp[j]);
            if ci == cj {
                continue;
            }
            if merges == n - 2 {
                break;
            }
            comp.iter_mut().filter(|c| **c == cj).for_each(|c| *c = ci);
            merges += 1;
        }
        let labels = data.labels().unwrap();
        for i in 0..n {
            for j in 0..n {
                assert_eq!(comp[i] == comp[j], labels[i] == labels[j]);
            }
        }
    }

    #[test]
    fn standardize_gives_unit_variance() {
        let data = generate_synthetic(SyntheticKind::TwoBlobs, 40, 1).unwrap();
        let z = data.standardized();
        for d in 0..2 {
            let col: Vec<f64> = (0..40).map(|i| z.row(i)[d]).collect();
            let mean = col.iter().sum::<f64>() / 40.0;
            let var = col.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / 40.0;
            assert!(mean.abs() < 1e-12);
            assert!((var - 1.0).abs() < 1e-12);
        }
    }

    proptest! {
        #[test]
        fn dissimilarity_axioms(rows in prop::collection::vec(prop::collection::vec(-1e3f64..1e3, 3), 2..12),
                                pairs in prop::collection::vec((0usize..100, 0usize..100), 1000)) {
            let data = DataMatrix::from_rows(&rows, None).unwrap();
            let n = data.n_objects();
            for (a, b) in pairs {
                let (i, j) = (a % n, b % n);
                let fij = dissimilarity(&data, i, j).unwrap();
                prop_assert!(fij >= 0.0);
                prop_assert_eq!(fij, dissimilarity(&data, j, i).unwrap());
                prop_assert_eq!(dissimilarity(&data, i, i).unwrap(), 0.0);
            }
        }

        #[test]
        fn csv_round_trip(rows in prop::collection::vec(prop::collection::vec(-1e6f64..1e6, 3), 1..20)) {
            let labels: Vec<usize> = (0..rows.len()).map(|i| i % 3).collect();
            let data = DataMatrix::from_rows(&rows, Some(labels)).unwrap();
            let mut buf = Vec::new();
            write_csv(&data, &mut buf).unwrap();
            let back = read_csv(buf.as_slice(), Some("label")).unwrap();
            prop_assert_eq!(back.n_objects(), data.n_objects());
            for (x, y) in back.values().iter().zip(data.values()) {
                prop_assert!((x - y).abs() <= 1e-12);
            }
        }
    }
}
