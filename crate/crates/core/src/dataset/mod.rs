//! In-memory data model and ingestion: feature matrix with missing-value
//! sentinel, labeled dataset, group-based feature sets, CSV loading, and
//! synthetic data generation.

pub mod manifest;
pub mod synthetic;

pub use manifest::{FeatureGroup, FeatureManifest};
pub use synthetic::{generate_synthetic, SyntheticSpec};

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Row-major matrix of `f64` values. `NaN` encodes a missing cell, so the
/// derived `PartialEq` treats two matrices with missing cells as unequal;
/// use [`Matrix::bits_eq`] when missing cells must compare equal.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    data: Vec<f64>,
    rows: usize,
    cols: usize,
}

impl Matrix {
    pub fn from_vec(data: Vec<f64>, rows: usize, cols: usize) -> Self {
        assert_eq!(data.len(), rows * cols, "matrix data length mismatch");
        Matrix { data, rows, cols }
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Self {
        let n_cols = rows.first().map_or(0, Vec::len);
        let mut data = Vec::with_capacity(rows.len() * n_cols);
        for row in rows {
            assert_eq!(row.len(), n_cols, "ragged rows");
            data.extend_from_slice(row);
        }
        Matrix { data, rows: rows.len(), cols: n_cols }
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix { data: vec![0.0; rows * cols], rows, cols }
    }

    pub fn n_rows(&self) -> usize {
        self.rows
    }

    pub fn n_cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> f64 {
        debug_assert!(row < self.rows && col < self.cols);
        self.data[row * self.cols + col]
    }

    #[inline]
    pub fn set(&mut self, row: usize, col: usize, value: f64) {
        debug_assert!(row < self.rows && col < self.cols);
        self.data[row * self.cols + col] = value;
    }

    pub fn row(&self, row: usize) -> &[f64] {
        &self.data[row * self.cols..(row + 1) * self.cols]
    }

    pub fn column(&self, col: usize) -> impl Iterator<Item = f64> + '_ {
        (0..self.rows).map(move |r| self.get(r, col))
    }

    pub fn select_columns(&self, keep: &[usize]) -> Matrix {
        let mut data = Vec::with_capacity(self.rows * keep.len());
        for r in 0..self.rows {
            let row = self.row(r);
            data.extend(keep.iter().map(|&c| row[c]));
        }
        Matrix { data, rows: self.rows, cols: keep.len() }
    }

    pub fn select_rows(&self, keep: &[usize]) -> Matrix {
        let mut data = Vec::with_capacity(keep.len() * self.cols);
        for &r in keep {
            data.extend_from_slice(self.row(r));
        }
        Matrix { data, rows: keep.len(), cols: self.cols }
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Matrix {
        Matrix {
            data: self.data.iter().map(|&v| f(v)).collect(),
            rows: self.rows,
            cols: self.cols,
        }
    }

    /// Bit-pattern equality; unlike `==` this treats NaN cells as equal.
    pub fn bits_eq(&self, other: &Matrix) -> bool {
        self.rows == other.rows
            && self.cols == other.cols
            && self
                .data
                .iter()
                .zip(&other.data)
                .all(|(a, b)| a.to_bits() == b.to_bits())
    }

    pub fn has_missing(&self) -> bool {
        self.data.iter().any(|v| v.is_nan())
    }

    pub fn all_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }
}

/// A labeled feature matrix plus per-column names and group tags.
///
/// Labels are binary class codes: 1 for the positive (attack) class and 0
/// for the negative (natural) class.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    feature_names: Vec<String>,
    groups: Vec<FeatureGroup>,
    values: Matrix,
    labels: Vec<u8>,
}

impl Dataset {
    pub fn new(
        feature_names: Vec<String>,
        groups: Vec<FeatureGroup>,
        values: Matrix,
        labels: Vec<u8>,
    ) -> Result<Self> {
        if feature_names.len() != values.n_cols() {
            return Err(Error::Usage(format!(
                "{} feature names for a matrix with {} columns",
                feature_names.len(),
                values.n_cols()
            )));
        }
        if groups.len() != values.n_cols() {
            return Err(Error::Usage(format!(
                "{} group tags for a matrix with {} columns",
                groups.len(),
                values.n_cols()
            )));
        }
        if labels.len() != values.n_rows() {
            return Err(Error::Usage(format!(
                "{} labels for a matrix with {} rows",
                labels.len(),
                values.n_rows()
            )));
        }
        if let Some(bad) = labels.iter().find(|&&l| l > 1) {
            return Err(Error::Label(format!(
                "label code {bad} out of range (expected 0 or 1)"
            )));
        }
        Ok(Dataset { feature_names, groups, values, labels })
    }

    pub fn feature_names(&self) -> &[String] {
        &self.feature_names
    }

    pub fn groups(&self) -> &[FeatureGroup] {
        &self.groups
    }

    pub fn values(&self) -> &Matrix {
        &self.values
    }

    pub fn labels(&self) -> &[u8] {
        &self.labels
    }

    pub fn n_rows(&self) -> usize {
        self.values.n_rows()
    }

    pub fn n_features(&self) -> usize {
        self.values.n_cols()
    }

    /// Copies out the given rows as a (matrix, labels) pair.
    pub fn gather(&self, rows: &[usize]) -> (Matrix, Vec<u8>) {
        let x = self.values.select_rows(rows);
        let y = rows.iter().map(|&r| self.labels[r]).collect();
        (x, y)
    }

    /// Replaces the value matrix, keeping names, groups, and labels.
    pub(crate) fn with_values(&self, values: Matrix) -> Dataset {
        assert_eq!(values.n_rows(), self.values.n_rows());
        assert_eq!(values.n_cols(), self.values.n_cols());
        Dataset {
            feature_names: self.feature_names.clone(),
            groups: self.groups.clone(),
            values,
            labels: self.labels.clone(),
        }
    }
}

/// The three nested feature sets used throughout the experiments.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeatureSet {
    /// Every column: measurements, relay status flags, and logs.
    All,
    /// Measurements and relay status flags; log columns dropped.
    PmuOnly,
    /// Measurements only; status flags and logs dropped.
    PmuWithoutStatus,
}

impl FeatureSet {
    pub fn keeps(self, group: FeatureGroup) -> bool {
        match self {
            FeatureSet::All => true,
            FeatureSet::PmuOnly => group != FeatureGroup::Log,
            FeatureSet::PmuWithoutStatus => group == FeatureGroup::PmuMeasurement,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            FeatureSet::All => "all",
            FeatureSet::PmuOnly => "pmu_only",
            FeatureSet::PmuWithoutStatus => "pmu_without_status",
        }
    }
}

impl fmt::Display for FeatureSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for FeatureSet {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "all" => Ok(FeatureSet::All),
            "pmu_only" => Ok(FeatureSet::PmuOnly),
            "pmu_without_status" => Ok(FeatureSet::PmuWithoutStatus),
            other => Err(Error::Usage(format!(
                "unknown feature set `{other}` (expected all, pmu_only, or pmu_without_status)"
            ))),
        }
    }
}

/// Restricts a dataset to the columns kept by the given feature set,
/// preserving column order and leaving rows and labels untouched.
pub fn select_feature_set(ds: &Dataset, set: FeatureSet) -> Dataset {
    let keep: Vec<usize> = ds
        .groups
        .iter()
        .enumerate()
        .filter(|(_, g)| set.keeps(**g))
        .map(|(i, _)| i)
        .collect();
    let feature_names = keep.iter().map(|&i| ds.feature_names[i].clone()).collect();
    let groups = keep.iter().map(|&i| ds.groups[i]).collect();
    let values = ds.values.select_columns(&keep);
    Dataset {
        feature_names,
        groups,
        values,
        labels: ds.labels.clone(),
    }
}

/// The default label column name in the benchmark CSV files.
pub const DEFAULT_LABEL_COLUMN: &str = "marker";

/// Default mapping from label strings to class codes.
pub fn default_label_map() -> BTreeMap<String, u8> {
    let mut map = BTreeMap::new();
    map.insert("Attack".to_string(), 1);
    map.insert("Natural".to_string(), 0);
    map
}

fn parse_cell(s: &str) -> f64 {
    let t = s.trim();
    if t.is_empty() {
        return f64::NAN;
    }
    // `f64::from_str` accepts inf, -inf, infinity, and nan case-insensitively;
    // anything else unparseable is treated as a missing cell.
    t.parse::<f64>().unwrap_or(f64::NAN)
}

struct FileBlock {
    values: Vec<f64>,
    labels: Vec<u8>,
    rows: usize,
}

fn read_file(
    path: &Path,
    reference_header: &[String],
    label_index: usize,
    label_map: &BTreeMap<String, u8>,
) -> Result<FileBlock> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_path(path)
        .map_err(|e| Error::Schema(format!("cannot open {}: {e}", path.display())))?;
    let header: Vec<String> = reader
        .headers()
        .map_err(|e| Error::Schema(format!("{}: {e}", path.display())))?
        .iter()
        .map(str::to_string)
        .collect();
    if header != reference_header {
        return Err(Error::Schema(format!(
            "{}: header differs from the first input file",
            path.display()
        )));
    }
    let n_features = header.len() - 1;
    let mut values = Vec::new();
    let mut labels = Vec::new();
    let mut rows = 0usize;
    for (i, record) in reader.records().enumerate() {
        let record = record.map_err(|e| {
            Error::Schema(format!("{} row {}: {e}", path.display(), i + 1))
        })?;
        if record.len() != header.len() {
            return Err(Error::Schema(format!(
                "{} row {}: {} fields, expected {}",
                path.display(),
                i + 1,
                record.len(),
                header.len()
            )));
        }
        for (j, cell) in record.iter().enumerate() {
            if j == label_index {
                let raw = cell.trim();
                let code = label_map.get(raw).ok_or_else(|| {
                    Error::Label(format!(
                        "{} row {}: label `{raw}` not in the label map",
                        path.display(),
                        i + 1
                    ))
                })?;
                labels.push(*code);
            } else {
                values.push(parse_cell(cell));
            }
        }
        rows += 1;
    }
    debug_assert_eq!(values.len(), rows * n_features);
    Ok(FileBlock { values, labels, rows })
}

/// Loads one or more CSV files that share an identical header into a single
/// dataset, concatenating rows in the order the paths are given.
///
/// Feature cells that are empty or non-numeric become missing values (NaN);
/// `inf`, `-inf`, and `nan` tokens parse to the corresponding non-finite
/// values. Every non-label column must appear in the manifest.
pub fn load_csv(
    paths: &[PathBuf],
    manifest: &FeatureManifest,
    label_column: &str,
    label_map: &BTreeMap<String, u8>,
) -> Result<Dataset> {
    if paths.is_empty() {
        return Err(Error::Usage("no input files given".to_string()));
    }
    if label_map.is_empty() {
        return Err(Error::Label("label map is empty".to_string()));
    }
    if let Some((name, code)) = label_map.iter().find(|(_, &c)| c > 1) {
        return Err(Error::Label(format!(
            "label map entry `{name}` has code {code} (expected 0 or 1)"
        )));
    }

    let first = &paths[0];
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_path(first)
        .map_err(|e| Error::Schema(format!("cannot open {}: {e}", first.display())))?;
    let reference_header: Vec<String> = reader
        .headers()
        .map_err(|e| Error::Schema(format!("{}: {e}", first.display())))?
        .iter()
        .map(str::to_string)
        .collect();
    drop(reader);

    let label_index = reference_header
        .iter()
        .position(|h| h == label_column)
        .ok_or_else(|| {
            Error::Schema(format!(
                "{}: label column `{label_column}` not found",
                first.display()
            ))
        })?;

    let mut feature_names = Vec::with_capacity(reference_header.len() - 1);
    let mut groups = Vec::with_capacity(reference_header.len() - 1);
    for (i, name) in reference_header.iter().enumerate() {
        if i == label_index {
            continue;
        }
        if feature_names.contains(name) {
            return Err(Error::Schema(format!(
                "{}: duplicate column `{name}`",
                first.display()
            )));
        }
        let group = manifest.group(name).ok_or_else(|| {
            Error::Manifest(format!("column `{name}` not present in the manifest"))
        })?;
        feature_names.push(name.clone());
        groups.push(group);
    }

    let blocks: Vec<FileBlock> = paths
        .par_iter()
        .map(|p| read_file(p, &reference_header, label_index, label_map))
        .collect::<Result<_>>()?;

    let total_rows: usize = blocks.iter().map(|b| b.rows).sum();
    let n_features = feature_names.len();
    let mut values = Vec::with_capacity(total_rows * n_features);
    let mut labels = Vec::with_capacity(total_rows);
    for block in blocks {
        values.extend(block.values);
        labels.extend(block.labels);
    }

    Dataset::new(
        feature_names,
        groups,
        Matrix::from_vec(values, total_rows, n_features),
        labels,
    )
}

/// Writes a dataset as a CSV file with the label in the last column,
/// mapping class codes back to strings via `label_names` (code 0 first,
/// code 1 second). Missing cells are written as empty strings.
pub fn write_csv(
    ds: &Dataset,
    path: &Path,
    label_column: &str,
    label_names: (&str, &str),
) -> Result<()> {
    use std::io::Write;

    let file = std::fs::File::create(path)?;
    let mut w = std::io::BufWriter::new(file);
    for name in ds.feature_names() {
        write!(w, "{name},")?;
    }
    writeln!(w, "{label_column}")?;
    for r in 0..ds.n_rows() {
        for &v in ds.values().row(r) {
            if v.is_nan() {
                write!(w, ",")?;
            } else {
                write!(w, "{v},")?;
            }
        }
        let label = if ds.labels()[r] == 1 { label_names.1 } else { label_names.0 };
        writeln!(w, "{label}")?;
    }
    w.flush()?;
    Ok(())
}
