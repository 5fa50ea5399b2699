//! Labeled point sets: CSV ingest/emit and the synthetic Gaussian-mixture
//! classification task used by the training pipelines.

use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};
use std::path::Path;

use crate::error::{ArpfError, Result};

/// Rectangular numeric data with optional integer labels.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    /// n × d row-major point matrix.
    pub rows: Array2<f64>,
    pub labels: Option<Vec<i64>>,
}

impl Dataset {
    pub fn new(rows: Array2<f64>, labels: Option<Vec<i64>>) -> Result<Self> {
        if let Some(l) = &labels {
            if l.len() != rows.nrows() {
                return Err(ArpfError::LengthMismatch {
                    left: l.len(),
                    right: rows.nrows(),
                });
            }
        }
        Ok(Dataset { rows, labels })
    }

    pub fn len(&self) -> usize {
        self.rows.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn dim(&self) -> usize {
        self.rows.ncols()
    }

    pub fn row(&self, i: usize) -> Vec<f64> {
        self.rows.row(i).to_vec()
    }

    /// Sorted distinct labels; error when the dataset is unlabeled.
    pub fn classes(&self) -> Result<Vec<i64>> {
        let labels = self
            .labels
            .as_ref()
            .ok_or_else(|| ArpfError::DegenerateData("dataset has no labels".into()))?;
        let mut classes: Vec<i64> = labels.clone();
        classes.sort_unstable();
        classes.dedup();
        Ok(classes)
    }

    /// Split by row position into a leading and a trailing dataset.
    pub fn split_at(&self, n_front: usize) -> Result<(Dataset, Dataset)> {
        if n_front > self.len() {
            return Err(ArpfError::InvalidParameter(format!(
                "cannot split {} rows at {n_front}",
                self.len()
            )));
        }
        let front = Dataset {
            rows: self.rows.slice(ndarray::s![..n_front, ..]).to_owned(),
            labels: self.labels.as_ref().map(|l| l[..n_front].to_vec()),
        };
        let back = Dataset {
            rows: self.rows.slice(ndarray::s![n_front.., ..]).to_owned(),
            labels: self.labels.as_ref().map(|l| l[n_front..].to_vec()),
        };
        Ok((front, back))
    }
}

/// Which CSV column holds the label.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum LabelColumn {
    Index(usize),
    /// Matched against the header row; requires `has_header`.
    Name(String),
}

#[derive(Debug, Clone)]
pub struct CsvOptions {
    pub delimiter: u8,
    pub has_header: bool,
    pub label_column: Option<LabelColumn>,
}

impl Default for CsvOptions {
    fn default() -> Self {
        CsvOptions {
            delimiter: b',',
            has_header: true,
            label_column: None,
        }
    }
}

/// Read a rectangular CSV into a dataset. Parse failures name the 1-based
/// file line and column; ragged rows are rejected.
pub fn load_csv(path: &Path, options: &CsvOptions) -> Result<Dataset> {
    let mut reader = csv::ReaderBuilder::new()
        .delimiter(options.delimiter)
        .has_headers(options.has_header)
        .flexible(true) // raggedness is checked manually for better errors
        .from_path(path)?;
    let label_index = match &options.label_column {
        None => None,
        Some(LabelColumn::Index(i)) => Some(*i),
        Some(LabelColumn::Name(name)) => {
            if !options.has_header {
                return Err(ArpfError::InvalidParameter(
                    "label column by name requires a header row".into(),
                ));
            }
            let headers = reader.headers()?.clone();
            let pos = headers.iter().position(|h| h == name).ok_or_else(|| {
                ArpfError::InvalidParameter(format!(
                    "label column '{name}' not found in header {:?}",
                    headers.iter().collect::<Vec<_>>()
                ))
            })?;
            Some(pos)
        }
    };
    let mut width: Option<usize> = None;
    let mut values: Vec<f64> = Vec::new();
    let mut labels: Vec<i64> = Vec::new();
    let mut nrows = 0usize;
    for record in reader.records() {
        let record = record?;
        let line = record
            .position()
            .map(|p| p.line())
            .unwrap_or(nrows as u64 + 1);
        match width {
            None => {
                if record.len() < 1 + label_index.map(|_| 1).unwrap_or(0) {
                    return Err(ArpfError::CsvParse {
                        line,
                        column: 0,
                        message: "row has too few fields".into(),
                    });
                }
                width = Some(record.len());
            }
            Some(w) => {
                if record.len() != w {
                    return Err(ArpfError::CsvParse {
                        line,
                        column: 0,
                        message: format!("ragged row: {} fields, expected {w}", record.len()),
                    });
                }
            }
        }
        if let Some(li) = label_index {
            if li >= record.len() {
                return Err(ArpfError::CsvParse {
                    line,
                    column: li + 1,
                    message: format!("label column {li} out of range"),
                });
            }
        }
        for (col, field) in record.iter().enumerate() {
            if Some(col) == label_index {
                let label: i64 = field.trim().parse().map_err(|_| ArpfError::CsvParse {
                    line,
                    column: col + 1,
                    message: format!("'{field}' is not an integer label"),
                })?;
                labels.push(label);
            } else {
                let v: f64 = field.trim().parse().map_err(|_| ArpfError::CsvParse {
                    line,
                    column: col + 1,
                    message: format!("'{field}' is not a number"),
                })?;
                values.push(v);
            }
        }
        nrows += 1;
    }
    let d = match width {
        None => {
            return Err(ArpfError::DegenerateData("CSV contains no data rows".into()));
        }
        Some(w) => w - label_index.map(|_| 1).unwrap_or(0),
    };
    if d == 0 {
        return Err(ArpfError::DegenerateData(
            "CSV rows contain only the label column".into(),
        ));
    }
    let rows = Array2::from_shape_vec((nrows, d), values)
        .map_err(|e| ArpfError::Format(format!("shape error assembling CSV data: {e}")))?;
    Dataset::new(rows, label_index.map(|_| labels))
}

/// Write a dataset as CSV with header `x0, x1, …[, label]`. Values use the
/// shortest representation that round-trips through f64 parsing.
pub fn save_csv(path: &Path, dataset: &Dataset) -> Result<()> {
    let mut writer = csv::WriterBuilder::new().from_path(path)?;
    let mut header: Vec<String> = (0..dataset.dim()).map(|j| format!("x{j}")).collect();
    if dataset.labels.is_some() {
        header.push("label".into());
    }
    writer.write_record(&header)?;
    for i in 0..dataset.len() {
        let mut record: Vec<String> = dataset.rows.row(i).iter().map(|v| format!("{v}")).collect();
        if let Some(labels) = &dataset.labels {
            record.push(format!("{}", labels[i]));
        }
        writer.write_record(&record)?;
    }
    writer.flush()?;
    Ok(())
}

/// Shape parameters of the synthetic mixture task.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MixtureSpread {
    /// Component centers are drawn uniformly from `[center_lo, center_hi]^d` …
    pub center_lo: f64,
    pub center_hi: f64,
    /// … rejecting candidates closer than this to any other class's centers
    /// (best effort: after 10⁴ rejected candidates the last one is kept).
    pub min_separation: f64,
    /// Isotropic noise around the chosen component center.
    pub noise: f64,
}

impl Default for MixtureSpread {
    fn default() -> Self {
        MixtureSpread {
            center_lo: -10.0,
            center_hi: 10.0,
            min_separation: 3.0,
            noise: 0.8,
        }
    }
}

/// Deterministic multi-class Gaussian-mixture task: each class is a mixture
/// of `components` isotropic blobs; rows are shuffled, labels are `0..classes`.
/// Class sizes are balanced up to rounding (the first `n mod classes` classes
/// get one extra point).
pub fn synth_gaussian_mixture(
    classes: usize,
    components: usize,
    d: usize,
    n: usize,
    seed: u64,
    spread: MixtureSpread,
) -> Result<Dataset> {
    if classes < 1 || components < 1 || d < 1 || n < 1 {
        return Err(ArpfError::InvalidParameter(
            "classes, components, dimension, and point count must be ≥ 1".into(),
        ));
    }
    if n < classes {
        return Err(ArpfError::InvalidParameter(format!(
            "need at least one point per class: n = {n} < classes = {classes}"
        )));
    }
    if !(spread.center_hi > spread.center_lo) || !(spread.noise >= 0.0) {
        return Err(ArpfError::InvalidParameter(
            "center interval must be nonempty and noise nonnegative".into(),
        ));
    }
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    // Place all component centers first, with cross-class separation.
    let mut centers = vec![vec![0.0f64; d]; classes * components];
    let mut placed: Vec<(usize, usize)> = Vec::new(); // (class, center index)
    for c in 0..classes {
        for j in 0..components {
            let idx = c * components + j;
            let mut candidate = vec![0.0f64; d];
            for _ in 0..10_000 {
                for v in candidate.iter_mut() {
                    *v = rng.gen::<f64>() * (spread.center_hi - spread.center_lo)
                        + spread.center_lo;
                }
                let ok = placed.iter().all(|&(pc, pi)| {
                    if pc == c {
                        return true;
                    }
                    let dist: f64 = centers[pi]
                        .iter()
                        .zip(&candidate)
                        .map(|(a, b)| (a - b) * (a - b))
                        .sum::<f64>()
                        .sqrt();
                    dist >= spread.min_separation
                });
                if ok {
                    break;
                }
            }
            centers[idx] = candidate;
            placed.push((c, idx));
        }
    }
    // Draw points class by class, then shuffle rows.
    let base = n / classes;
    let extra = n % classes;
    let mut all_rows: Vec<(Vec<f64>, i64)> = Vec::with_capacity(n);
    for c in 0..classes {
        let count = base + usize::from(c < extra);
        for _ in 0..count {
            let j = rng.gen_range(0..components);
            let center = &centers[c * components + j];
            let point: Vec<f64> = center
                .iter()
                .map(|&mu| {
                    let z: f64 = StandardNormal.sample(&mut rng);
                    mu + spread.noise * z
                })
                .collect();
            all_rows.push((point, c as i64));
        }
    }
    // Fisher–Yates with the same generator keeps the whole dataset a pure
    // function of the seed.
    for i in (1..all_rows.len()).rev() {
        let j = rng.gen_range(0..=i);
        all_rows.swap(i, j);
    }
    let mut values = Vec::with_capacity(n * d);
    let mut labels = Vec::with_capacity(n);
    for (point, label) in &all_rows {
        values.extend_from_slice(point);
        labels.push(*label);
    }
    let rows = Array2::from_shape_vec((n, d), values)
        .map_err(|e| ArpfError::Format(format!("shape error assembling mixture: {e}")))?;
    Dataset::new(rows, Some(labels))
}
