//! Tabular datasets: ingestion, splitting, canonical export and the
//! synthetic Gaussian-mixture benchmark.

mod export;
mod ingest;
mod split;
mod synthetic;

pub use export::{read_canonical, schema_path_for, write_canonical, FeatureSchema};
pub use ingest::{ingest_csv, ColumnDecl, IngestOptions, IngestReport, Transform, Undeclared};
pub use split::{split, split_with_rest, SplitSpec};
pub use synthetic::{generate_synthetic, GaussianComponent, SyntheticSpec};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum DataError {
    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("schema error: {0}")]
    Schema(String),
    #[error("unknown column in schema: {0}")]
    UnknownColumn(String),
    #[error("label column non-binary: value {value:?} at data row {row}")]
    LabelNotBinary { row: usize, value: String },
    #[error("column {column}: cannot parse {value:?} at data row {row}")]
    Parse {
        column: String,
        row: usize,
        value: String,
    },
    #[error("dataset is empty after row deletion")]
    EmptyAfterCleaning,
    #[error("invalid split: {0}")]
    InvalidSplit(String),
    #[error("invalid synthetic spec: {0}")]
    InvalidSynthetic(String),
    #[error("dataset has no labels")]
    Unlabelled,
    #[error("feature mismatch: {0}")]
    FeatureMismatch(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ColumnKind {
    Numeric,
    Binary,
    /// Ordered codes; split like a numeric column.
    Ordinal,
    /// Integer category codes indexing `Column::categories`.
    Categorical,
}

impl ColumnKind {
    /// Whether splits use `value <= threshold` tests.
    pub fn is_ordered(self) -> bool {
        !matches!(self, ColumnKind::Categorical)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Column {
    pub name: String,
    pub kind: ColumnKind,
    /// Category labels for categorical columns; code `i` is `categories[i]`.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub categories: Vec<String>,
}

impl Column {
    pub fn numeric(name: impl Into<String>) -> Self {
        Column {
            name: name.into(),
            kind: ColumnKind::Numeric,
            categories: Vec::new(),
        }
    }

    pub fn binary(name: impl Into<String>) -> Self {
        Column {
            name: name.into(),
            kind: ColumnKind::Binary,
            categories: Vec::new(),
        }
    }

    pub fn categorical(name: impl Into<String>, categories: Vec<String>) -> Self {
        Column {
            name: name.into(),
            kind: ColumnKind::Categorical,
            categories,
        }
    }

    /// Number of distinct values a flip-style perturbation can choose from.
    pub fn category_count(&self) -> usize {
        match self.kind {
            ColumnKind::Binary => 2,
            ColumnKind::Categorical => self.categories.len(),
            _ => 0,
        }
    }
}

/// Synthetic generator tags: the mixture component each row was drawn
/// from, and which components sit in the label-overlap region.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComponentTags {
    pub component: Vec<u8>,
    pub overlap_components: Vec<u8>,
}

impl ComponentTags {
    pub fn is_overlap(&self, row: usize) -> bool {
        self.overlap_components.contains(&self.component[row])
    }
}

/// An immutable feature matrix with optional binary labels.
///
/// Values are stored row-major as `f64`; categorical values are category
/// codes. Every row carries a stable `row_id` that survives splitting and
/// resampling so reports can point back to the source record.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    columns: Vec<Column>,
    values: Vec<f64>,
    labels: Option<Vec<u8>>,
    label_name: Option<String>,
    row_ids: Vec<u64>,
    tags: Option<ComponentTags>,
}

impl Dataset {
    /// Builds a dataset from row-major values, checking every invariant.
    pub fn new(
        columns: Vec<Column>,
        values: Vec<f64>,
        labels: Option<Vec<u8>>,
        row_ids: Option<Vec<u64>>,
    ) -> Result<Self, DataError> {
        let d = columns.len();
        if d == 0 && !values.is_empty() {
            return Err(DataError::Schema("values given without columns".into()));
        }
        let n = if d == 0 {
            labels.as_ref().map_or(0, Vec::len)
        } else {
            if !values.len().is_multiple_of(d) {
                return Err(DataError::Schema(format!(
                    "{} values do not fill rows of width {d}",
                    values.len()
                )));
            }
            values.len() / d
        };
        if let Some(labels) = &labels {
            if labels.len() != n {
                return Err(DataError::Schema(format!(
                    "{} labels for {n} rows",
                    labels.len()
                )));
            }
            if let Some(pos) = labels.iter().position(|&y| y > 1) {
                return Err(DataError::LabelNotBinary {
                    row: pos,
                    value: labels[pos].to_string(),
                });
            }
        }
        for (j, col) in columns.iter().enumerate() {
            for i in 0..n {
                let v = values[i * d + j];
                let ok = match col.kind {
                    ColumnKind::Binary => v == 0.0 || v == 1.0,
                    ColumnKind::Categorical => {
                        v >= 0.0 && v.fract() == 0.0 && (v as usize) < col.categories.len()
                    }
                    ColumnKind::Numeric | ColumnKind::Ordinal => v.is_finite(),
                };
                if !ok {
                    return Err(DataError::Parse {
                        column: col.name.clone(),
                        row: i,
                        value: v.to_string(),
                    });
                }
            }
        }
        let row_ids = match row_ids {
            Some(ids) if ids.len() != n => {
                return Err(DataError::Schema(format!(
                    "{} row ids for {n} rows",
                    ids.len()
                )))
            }
            Some(ids) => ids,
            None => (0..n as u64).collect(),
        };
        Ok(Dataset {
            columns,
            values,
            labels,
            label_name: None,
            row_ids,
            tags: None,
        })
    }

    pub fn with_label_name(mut self, name: impl Into<String>) -> Self {
        self.label_name = Some(name.into());
        self
    }

    pub fn with_tags(mut self, tags: ComponentTags) -> Result<Self, DataError> {
        if tags.component.len() != self.n_rows() {
            return Err(DataError::Schema("tag count differs from row count".into()));
        }
        self.tags = Some(tags);
        Ok(self)
    }

    pub fn n_rows(&self) -> usize {
        self.row_ids.len()
    }

    pub fn n_features(&self) -> usize {
        self.columns.len()
    }

    pub fn is_empty(&self) -> bool {
        self.n_rows() == 0
    }

    pub fn columns(&self) -> &[Column] {
        &self.columns
    }

    pub fn feature_names(&self) -> Vec<String> {
        self.columns.iter().map(|c| c.name.clone()).collect()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        let d = self.columns.len();
        &self.values[i * d..(i + 1) * d]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> + '_ {
        (0..self.n_rows()).map(move |i| self.row(i))
    }

    pub fn value(&self, row: usize, feature: usize) -> f64 {
        self.values[row * self.columns.len() + feature]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn labels(&self) -> Option<&[u8]> {
        self.labels.as_deref()
    }

    pub fn require_labels(&self) -> Result<&[u8], DataError> {
        self.labels.as_deref().ok_or(DataError::Unlabelled)
    }

    pub fn label_name(&self) -> Option<&str> {
        self.label_name.as_deref()
    }

    pub fn row_ids(&self) -> &[u64] {
        &self.row_ids
    }

    pub fn tags(&self) -> Option<&ComponentTags> {
        self.tags.as_ref()
    }

    /// Rows selected by index, in the given order; duplicates allowed.
    pub fn select_rows(&self, indices: &[usize]) -> Dataset {
        let d = self.columns.len();
        let mut values = Vec::with_capacity(indices.len() * d);
        for &i in indices {
            values.extend_from_slice(self.row(i));
        }
        Dataset {
            columns: self.columns.clone(),
            values,
            labels: self
                .labels
                .as_ref()
                .map(|l| indices.iter().map(|&i| l[i]).collect()),
            label_name: self.label_name.clone(),
            row_ids: indices.iter().map(|&i| self.row_ids[i]).collect(),
            tags: self.tags.as_ref().map(|t| ComponentTags {
                component: indices.iter().map(|&i| t.component[i]).collect(),
                overlap_components: t.overlap_components.clone(),
            }),
        }
    }

    /// Same rows and schema with the feature matrix replaced.
    pub(crate) fn with_values(&self, values: Vec<f64>) -> Dataset {
        debug_assert_eq!(values.len(), self.values.len());
        Dataset {
            values,
            ..self.clone()
        }
    }

    /// Checks that `other` exposes the same features (names, kinds and
    /// category codes) in the same order.
    pub fn check_same_features(&self, other: &[Column]) -> Result<(), DataError> {
        if self.columns.len() != other.len() {
            return Err(DataError::FeatureMismatch(format!(
                "expected {} features, found {}",
                other.len(),
                self.columns.len()
            )));
        }
        for (a, b) in self.columns.iter().zip(other) {
            if a != b {
                return Err(DataError::FeatureMismatch(format!(
                    "column {:?} ({:?}) does not match {:?} ({:?})",
                    a.name, a.kind, b.name, b.kind
                )));
            }
        }
        Ok(())
    }

    /// Content hash of the feature schema, feature values and row ids.
    ///
    /// Labels and tags are excluded: a labelled and an unlabelled copy of
    /// the same rows share a fingerprint.
    pub fn fingerprint(&self) -> String {
        let mut h = Sha256::new();
        for c in &self.columns {
            h.update(c.name.as_bytes());
            h.update([0u8, c.kind as u8]);
            for cat in &c.categories {
                h.update(cat.as_bytes());
                h.update([0u8]);
            }
        }
        h.update((self.n_rows() as u64).to_le_bytes());
        for id in &self.row_ids {
            h.update(id.to_le_bytes());
        }
        for v in &self.values {
            h.update(v.to_bits().to_le_bytes());
        }
        hex::encode(&h.finalize()[..16])
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny() -> Dataset {
        Dataset::new(
            vec![Column::numeric("a"), Column::binary("b")],
            vec![0.5, 1.0, 2.5, 0.0, 3.0, 1.0],
            Some(vec![1, 0, 1]),
            None,
        )
        .unwrap()
    }

    #[test]
    fn rejects_non_binary_labels() {
        let err = Dataset::new(vec![Column::numeric("a")], vec![1.0], Some(vec![2]), None);
        assert!(matches!(err, Err(DataError::LabelNotBinary { .. })));
    }

    #[test]
    fn rejects_bad_binary_column() {
        let err = Dataset::new(vec![Column::binary("b")], vec![0.5], Some(vec![0]), None);
        assert!(matches!(err, Err(DataError::Parse { .. })));
    }

    #[test]
    fn select_rows_keeps_ids() {
        let ds = tiny();
        let sub = ds.select_rows(&[2, 2, 0]);
        assert_eq!(sub.row_ids(), &[2, 2, 0]);
        assert_eq!(sub.row(0), &[3.0, 1.0]);
        assert_eq!(sub.labels().unwrap(), &[1, 1, 1]);
    }

    #[test]
    fn fingerprint_ignores_labels() {
        let ds = tiny();
        let unlabelled =
            Dataset::new(ds.columns().to_vec(), ds.values().to_vec(), None, None).unwrap();
        assert_eq!(ds.fingerprint(), unlabelled.fingerprint());
        let shifted = ds.with_values(vec![0.5, 1.0, 2.5, 0.0, 3.5, 1.0]);
        assert_ne!(ds.fingerprint(), shifted.fingerprint());
    }
}
