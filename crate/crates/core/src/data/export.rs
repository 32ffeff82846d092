use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::ingest::{ingest_csv, ColumnDecl, IngestOptions, Undeclared};
use super::{Column, ColumnKind, DataError, Dataset};

pub const ROW_ID_COLUMN: &str = "row_id";
pub const TAG_COLUMN: &str = "component";
const SCHEMA_VERSION: u32 = 1;

/// Sidecar describing a canonical CSV: feature kinds, category lists and
/// the names of the label, id and tag columns.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureSchema {
    pub version: u32,
    pub delimiter: char,
    pub label: Option<String>,
    pub id_column: String,
    #[serde(default)]
    pub tag_column: Option<String>,
    #[serde(default)]
    pub overlap_tags: Vec<u8>,
    pub columns: Vec<Column>,
}

impl FeatureSchema {
    pub fn of(ds: &Dataset) -> Self {
        FeatureSchema {
            version: SCHEMA_VERSION,
            delimiter: ',',
            label: ds
                .labels()
                .map(|_| ds.label_name().unwrap_or("label").to_string()),
            id_column: ROW_ID_COLUMN.to_string(),
            tag_column: ds.tags().map(|_| TAG_COLUMN.to_string()),
            overlap_tags: ds
                .tags()
                .map(|t| t.overlap_components.clone())
                .unwrap_or_default(),
            columns: ds.columns().to_vec(),
        }
    }

    /// Ingest options that read files in this canonical layout. The label
    /// is optional so unlabelled rows can be scored.
    pub fn ingest_options(&self) -> IngestOptions {
        IngestOptions {
            delimiter: self.delimiter,
            label: self.label.clone(),
            require_label: false,
            id_column: Some(self.id_column.clone()),
            tag_column: self.tag_column.clone(),
            overlap_tags: self.overlap_tags.clone(),
            columns: self
                .columns
                .iter()
                .map(|c| ColumnDecl {
                    name: c.name.clone(),
                    kind: c.kind,
                    categories: (c.kind == ColumnKind::Categorical).then(|| c.categories.clone()),
                })
                .collect(),
            transforms: Vec::new(),
            missing_tokens: vec![String::new()],
            undeclared: Undeclared::Ignore,
        }
    }

    pub fn save(&self, path: &Path) -> Result<(), DataError> {
        let text =
            serde_json::to_string_pretty(self).map_err(|e| DataError::Schema(e.to_string()))?;
        std::fs::write(path, text + "\n").map_err(|source| DataError::Io {
            path: path.display().to_string(),
            source,
        })
    }

    pub fn load(path: &Path) -> Result<Self, DataError> {
        let text = std::fs::read_to_string(path).map_err(|source| DataError::Io {
            path: path.display().to_string(),
            source,
        })?;
        serde_json::from_str(&text)
            .map_err(|e| DataError::Schema(format!("{}: {e}", path.display())))
    }
}

/// `data.csv` -> `data.csv.schema.json`
pub fn schema_path_for(csv_path: &Path) -> PathBuf {
    let mut s = csv_path.as_os_str().to_owned();
    s.push(".schema.json");
    PathBuf::from(s)
}

/// Writes `ds` as a canonical CSV plus its schema sidecar.
///
/// Categorical values are written as their category strings, numbers in
/// shortest round-trip form, so [`read_canonical`] reproduces `ds` exactly.
pub fn write_canonical(ds: &Dataset, path: &Path) -> Result<(), DataError> {
    let schema = FeatureSchema::of(ds);
    let mut w = csv::WriterBuilder::new()
        .delimiter(schema.delimiter as u8)
        .from_path(path)?;
    let mut header = vec![schema.id_column.clone()];
    header.extend(ds.feature_names());
    if let Some(l) = &schema.label {
        header.push(l.clone());
    }
    if let Some(t) = &schema.tag_column {
        header.push(t.clone());
    }
    w.write_record(&header)?;
    for i in 0..ds.n_rows() {
        let mut rec = Vec::with_capacity(header.len());
        rec.push(ds.row_ids()[i].to_string());
        for (col, &v) in ds.columns().iter().zip(ds.row(i)) {
            rec.push(match col.kind {
                ColumnKind::Categorical => col.categories[v as usize].clone(),
                _ => format_value(v),
            });
        }
        if let Some(labels) = ds.labels() {
            rec.push(labels[i].to_string());
        }
        if let Some(tags) = ds.tags() {
            rec.push(tags.component[i].to_string());
        }
        w.write_record(&rec)?;
    }
    w.flush().map_err(|source| DataError::Io {
        path: path.display().to_string(),
        source,
    })?;
    schema.save(&schema_path_for(path))
}

/// Reads a canonical CSV written by [`write_canonical`] using its sidecar.
pub fn read_canonical(path: &Path) -> Result<Dataset, DataError> {
    let schema = FeatureSchema::load(&schema_path_for(path))?;
    let (ds, _) = ingest_csv(path, &schema.ingest_options())?;
    Ok(ds)
}

pub(crate) fn format_value(v: f64) -> String {
    if v.fract() == 0.0 && v.abs() < 1e15 {
        format!("{}", v as i64)
    } else {
        format!("{v}")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{generate_synthetic, SyntheticSpec};
    use proptest::prelude::*;

    fn mixed(values: Vec<f64>, cats: Vec<u8>, labels: Vec<u8>) -> Dataset {
        let n = labels.len();
        let mut flat = Vec::with_capacity(n * 3);
        for i in 0..n {
            flat.push(values[i]);
            flat.push(f64::from(cats[i] % 3));
            flat.push(f64::from(labels[i]));
        }
        Dataset::new(
            vec![
                Column::numeric("x"),
                Column::categorical("c", vec!["red".into(), "green".into(), "blue".into()]),
                Column::binary("b"),
            ],
            flat,
            Some(labels),
            Some((0..n as u64).map(|i| i * 7 + 3).collect()),
        )
        .unwrap()
        .with_label_name("target")
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]
        #[test]
        fn canonical_round_trip(rows in prop::collection::vec((-1e6f64..1e6, 0u8..3, 0u8..2), 1..40)) {
            let dir = tempfile::tempdir().unwrap();
            let path = dir.path().join("d.csv");
            let ds = mixed(
                rows.iter().map(|r| r.0).collect(),
                rows.iter().map(|r| r.1).collect(),
                rows.iter().map(|r| r.2).collect(),
            );
            write_canonical(&ds, &path).unwrap();
            let back = read_canonical(&path).unwrap();
            prop_assert_eq!(back, ds);
        }
    }

    #[test]
    fn synthetic_round_trip_keeps_tags() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("syn.csv");
        let (ds, _) = generate_synthetic(&SyntheticSpec::default_mixture(50, 3)).unwrap();
        write_canonical(&ds, &path).unwrap();
        assert_eq!(read_canonical(&path).unwrap(), ds);
    }
}
