use std::collections::{BTreeSet, HashMap};
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{Column, ColumnKind, ComponentTags, DataError, Dataset};

/// Declared kind (and optionally fixed category list) for one CSV column.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ColumnDecl {
    pub name: String,
    pub kind: ColumnKind,
    /// Fixes the code assignment for categorical columns. Values outside
    /// the list are rejected.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub categories: Option<Vec<String>>,
}

/// Preprocessing step applied to raw string values before typing.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "snake_case")]
pub enum Transform {
    Drop {
        column: String,
    },
    /// Maps the listed values to 1 and every other value to 0.
    Binarize {
        column: String,
        positive: Vec<String>,
    },
}

/// What to do with CSV columns that the schema does not mention.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Undeclared {
    /// Keep them as features with an inferred kind.
    #[default]
    Infer,
    /// Skip them; only declared columns become features.
    Ignore,
}

fn default_delimiter() -> char {
    ','
}

fn default_missing() -> Vec<String> {
    ["", "NA", "NaN", "nan", "?"]
        .iter()
        .map(|s| s.to_string())
        .collect()
}

fn default_true() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IngestOptions {
    #[serde(default = "default_delimiter")]
    pub delimiter: char,
    /// Label column; required unless `require_label` is false.
    #[serde(default)]
    pub label: Option<String>,
    #[serde(default = "default_true")]
    pub require_label: bool,
    #[serde(default)]
    pub id_column: Option<String>,
    #[serde(default)]
    pub tag_column: Option<String>,
    #[serde(default)]
    pub overlap_tags: Vec<u8>,
    #[serde(default)]
    pub columns: Vec<ColumnDecl>,
    #[serde(default)]
    pub transforms: Vec<Transform>,
    #[serde(default = "default_missing")]
    pub missing_tokens: Vec<String>,
    #[serde(default)]
    pub undeclared: Undeclared,
}

impl Default for IngestOptions {
    fn default() -> Self {
        IngestOptions {
            delimiter: default_delimiter(),
            label: None,
            require_label: true,
            id_column: None,
            tag_column: None,
            overlap_tags: Vec::new(),
            columns: Vec::new(),
            transforms: Vec::new(),
            missing_tokens: default_missing(),
            undeclared: Undeclared::Infer,
        }
    }
}

impl IngestOptions {
    pub fn with_label(label: impl Into<String>) -> Self {
        IngestOptions {
            label: Some(label.into()),
            ..Default::default()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IngestReport {
    pub rows_read: usize,
    pub rows_removed: usize,
    pub dropped_columns: Vec<String>,
    pub binarized_columns: Vec<String>,
}

impl fmt::Display for IngestReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let noun = if self.rows_removed == 1 {
            "row"
        } else {
            "rows"
        };
        write!(
            f,
            "{} rows read, {} {noun} removed",
            self.rows_read, self.rows_removed
        )?;
        if !self.dropped_columns.is_empty() {
            write!(f, ", dropped [{}]", self.dropped_columns.join(", "))?;
        }
        if !self.binarized_columns.is_empty() {
            write!(f, ", binarised [{}]", self.binarized_columns.join(", "))?;
        }
        Ok(())
    }
}

/// Reads a delimited file with a header row into a [`Dataset`].
///
/// Order of operations: declared drops, deletion of rows with a missing
/// value in any retained column, binarisation, typing.
pub fn ingest_csv(
    path: impl AsRef<Path>,
    opts: &IngestOptions,
) -> Result<(Dataset, IngestReport), DataError> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|source| DataError::Io {
        path: path.display().to_string(),
        source,
    })?;
    ingest_reader(file, opts)
}

pub(crate) fn ingest_reader<R: std::io::Read>(
    reader: R,
    opts: &IngestOptions,
) -> Result<(Dataset, IngestReport), DataError> {
    if !opts.delimiter.is_ascii() {
        return Err(DataError::Schema(format!(
            "delimiter {:?} is not ASCII",
            opts.delimiter
        )));
    }
    let mut rdr = csv::ReaderBuilder::new()
        .delimiter(opts.delimiter as u8)
        .has_headers(true)
        .from_reader(reader);
    let header: Vec<String> = rdr
        .headers()?
        .iter()
        .map(|s| s.trim().to_string())
        .collect();
    let position: HashMap<&str, usize> = header
        .iter()
        .enumerate()
        .map(|(i, h)| (h.as_str(), i))
        .collect();
    let lookup = |name: &str| -> Result<usize, DataError> {
        position
            .get(name)
            .copied()
            .ok_or_else(|| DataError::UnknownColumn(name.to_string()))
    };

    let label_idx = match &opts.label {
        Some(l) => match lookup(l) {
            Ok(i) => Some(i),
            Err(_) if !opts.require_label => None,
            Err(e) => return Err(e),
        },
        None if opts.require_label => {
            return Err(DataError::Schema("no label column named".into()))
        }
        None => None,
    };
    let id_idx = opts.id_column.as_deref().map(lookup).transpose()?;
    let tag_idx = opts.tag_column.as_deref().map(lookup).transpose()?;

    let mut dropped = BTreeSet::new();
    let mut positive: HashMap<usize, BTreeSet<&str>> = HashMap::new();
    for t in &opts.transforms {
        match t {
            Transform::Drop { column } => {
                let i = lookup(column)?;
                if Some(i) == label_idx {
                    return Err(DataError::Schema(format!(
                        "cannot drop label column {column}"
                    )));
                }
                dropped.insert(i);
            }
            Transform::Binarize {
                column,
                positive: pos,
            } => {
                let i = lookup(column)?;
                positive
                    .entry(i)
                    .or_default()
                    .extend(pos.iter().map(String::as_str));
            }
        }
    }
    let decls: HashMap<usize, &ColumnDecl> = opts
        .columns
        .iter()
        .map(|d| Ok((lookup(&d.name)?, d)))
        .collect::<Result<_, DataError>>()?;

    let reserved = |i: usize| Some(i) == label_idx || Some(i) == id_idx || Some(i) == tag_idx;
    let features: Vec<usize> = match opts.undeclared {
        Undeclared::Infer => (0..header.len())
            .filter(|&i| !reserved(i) && !dropped.contains(&i))
            .collect(),
        Undeclared::Ignore => opts
            .columns
            .iter()
            .map(|d| position[d.name.as_str()])
            .filter(|&i| !reserved(i) && !dropped.contains(&i))
            .collect(),
    };

    let mut used: Vec<usize> = features.clone();
    used.extend(label_idx);
    used.extend(id_idx);
    used.extend(tag_idx);

    let mut records: Vec<Vec<String>> = Vec::new();
    let mut rows_read = 0usize;
    for rec in rdr.records() {
        let rec = rec?;
        rows_read += 1;
        let missing = used.iter().any(|&i| {
            let v = rec.get(i).unwrap_or("").trim();
            opts.missing_tokens.iter().any(|m| m == v)
        });
        if missing {
            continue;
        }
        let mut row: Vec<String> = rec.iter().map(|s| s.trim().to_string()).collect();
        for (&i, pos) in &positive {
            let hit = pos.contains(row[i].as_str());
            row[i] = if hit { "1" } else { "0" }.to_string();
        }
        records.push(row);
    }
    let rows_removed = rows_read - records.len();
    if records.is_empty() {
        return Err(DataError::EmptyAfterCleaning);
    }

    let mut columns = Vec::with_capacity(features.len());
    let mut typed: Vec<Vec<f64>> = Vec::with_capacity(features.len());
    for &i in &features {
        let name = &header[i];
        let raw: Vec<&str> = records.iter().map(|r| r[i].as_str()).collect();
        let kind = if positive.contains_key(&i) {
            ColumnKind::Binary
        } else if let Some(d) = decls.get(&i) {
            d.kind
        } else {
            infer_kind(&raw)
        };
        let fixed = decls.get(&i).and_then(|d| d.categories.clone());
        let (col, vals) = type_column(name, kind, fixed, &raw)?;
        columns.push(col);
        typed.push(vals);
    }

    let n = records.len();
    let d = columns.len();
    let mut values = vec![0.0; n * d];
    for (j, col) in typed.iter().enumerate() {
        for (r, &v) in col.iter().enumerate() {
            values[r * d + j] = v;
        }
    }

    let labels = label_idx
        .map(|li| {
            records
                .iter()
                .enumerate()
                .map(|(r, rec)| parse_label(&rec[li], r))
                .collect::<Result<Vec<u8>, _>>()
        })
        .transpose()?;
    let row_ids = id_idx
        .map(|ii| {
            records
                .iter()
                .enumerate()
                .map(|(r, rec)| {
                    rec[ii].parse::<u64>().map_err(|_| DataError::Parse {
                        column: header[ii].clone(),
                        row: r,
                        value: rec[ii].clone(),
                    })
                })
                .collect::<Result<Vec<u64>, _>>()
        })
        .transpose()?;
    let tags = tag_idx
        .map(|ti| {
            records
                .iter()
                .enumerate()
                .map(|(r, rec)| {
                    rec[ti].parse::<u8>().map_err(|_| DataError::Parse {
                        column: header[ti].clone(),
                        row: r,
                        value: rec[ti].clone(),
                    })
                })
                .collect::<Result<Vec<u8>, _>>()
        })
        .transpose()?;

    let mut ds = Dataset::new(columns, values, labels, row_ids)?;
    if let Some(l) = label_idx {
        ds = ds.with_label_name(header[l].clone());
    }
    if let Some(component) = tags {
        ds = ds.with_tags(ComponentTags {
            component,
            overlap_components: opts.overlap_tags.clone(),
        })?;
    }
    let report = IngestReport {
        rows_read,
        rows_removed,
        dropped_columns: dropped.iter().map(|&i| header[i].clone()).collect(),
        binarized_columns: {
            let mut b: Vec<usize> = positive.keys().copied().collect();
            b.sort_unstable();
            b.into_iter().map(|i| header[i].clone()).collect()
        },
    };
    Ok((ds, report))
}

fn infer_kind(raw: &[&str]) -> ColumnKind {
    let mut binary = true;
    for v in raw {
        match v.parse::<f64>() {
            Ok(x) if x.is_finite() => binary &= x == 0.0 || x == 1.0,
            _ => return ColumnKind::Categorical,
        }
    }
    if binary {
        ColumnKind::Binary
    } else {
        ColumnKind::Numeric
    }
}

fn type_column(
    name: &str,
    kind: ColumnKind,
    fixed_categories: Option<Vec<String>>,
    raw: &[&str],
) -> Result<(Column, Vec<f64>), DataError> {
    let parse_err = |row: usize, value: &str| DataError::Parse {
        column: name.to_string(),
        row,
        value: value.to_string(),
    };
    match kind {
        ColumnKind::Categorical => {
            let categories = match fixed_categories {
                Some(c) => c,
                None => raw
                    .iter()
                    .map(|s| s.to_string())
                    .collect::<BTreeSet<_>>()
                    .into_iter()
                    .collect(),
            };
            let code: HashMap<&str, usize> = categories
                .iter()
                .enumerate()
                .map(|(i, c)| (c.as_str(), i))
                .collect();
            let vals = raw
                .iter()
                .enumerate()
                .map(|(r, v)| {
                    code.get(v)
                        .map(|&c| c as f64)
                        .ok_or_else(|| parse_err(r, v))
                })
                .collect::<Result<Vec<_>, _>>()?;
            Ok((Column::categorical(name, categories), vals))
        }
        _ => {
            let vals = raw
                .iter()
                .enumerate()
                .map(|(r, v)| {
                    let x: f64 = v.parse().map_err(|_| parse_err(r, v))?;
                    let ok = match kind {
                        ColumnKind::Binary => x == 0.0 || x == 1.0,
                        _ => x.is_finite(),
                    };
                    if ok {
                        Ok(x)
                    } else {
                        Err(parse_err(r, v))
                    }
                })
                .collect::<Result<Vec<_>, _>>()?;
            Ok((
                Column {
                    name: name.to_string(),
                    kind,
                    categories: Vec::new(),
                },
                vals,
            ))
        }
    }
}

fn parse_label(v: &str, row: usize) -> Result<u8, DataError> {
    match v.parse::<f64>() {
        Ok(0.0) => Ok(0),
        Ok(1.0) => Ok(1),
        _ => Err(DataError::LabelNotBinary {
            row,
            value: v.to_string(),
        }),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ingest(text: &str, opts: &IngestOptions) -> Result<(Dataset, IngestReport), DataError> {
        ingest_reader(text.as_bytes(), opts)
    }

    #[test]
    fn drops_rows_with_missing_values() {
        let csv = "a,b,y\n1,2,0\n3,,1\n4,5,1\n6,7,0\n8,9,1\n";
        let (ds, report) = ingest(csv, &IngestOptions::with_label("y")).unwrap();
        assert_eq!(ds.n_rows(), 4);
        assert_eq!(report.rows_removed, 1);
        assert!(report.to_string().contains("1 row removed"));
        assert_eq!(ds.row_ids(), &[0, 1, 2, 3]);
    }

    #[test]
    fn binarises_listed_categories() {
        let csv = "MAR,AGEP,y\nmarried,30,1\nnever,22,0\ndivorced,50,1\nmarried,41,0\n";
        let opts = IngestOptions {
            transforms: vec![Transform::Binarize {
                column: "MAR".into(),
                positive: vec!["married".into()],
            }],
            ..IngestOptions::with_label("y")
        };
        let (ds, report) = ingest(csv, &opts).unwrap();
        assert_eq!(ds.columns()[0].kind, ColumnKind::Binary);
        let mar: Vec<f64> = ds.rows().map(|r| r[0]).collect();
        assert_eq!(mar, vec![1.0, 0.0, 0.0, 1.0]);
        assert_eq!(report.binarized_columns, vec!["MAR".to_string()]);
    }

    #[test]
    fn label_with_value_two_is_rejected() {
        let csv = "a,y\n1,0\n2,2\n";
        let err = ingest(csv, &IngestOptions::with_label("y")).unwrap_err();
        assert!(matches!(err, DataError::LabelNotBinary { .. }));
        assert!(err.to_string().contains("label column non-binary"));
    }

    #[test]
    fn unknown_schema_column_is_rejected() {
        let opts = IngestOptions {
            columns: vec![ColumnDecl {
                name: "nope".into(),
                kind: ColumnKind::Numeric,
                categories: None,
            }],
            ..IngestOptions::with_label("y")
        };
        let err = ingest("a,y\n1,0\n", &opts).unwrap_err();
        assert!(matches!(err, DataError::UnknownColumn(c) if c == "nope"));
    }

    #[test]
    fn all_rows_missing_is_an_error() {
        let err = ingest("a,y\n,0\nNA,1\n", &IngestOptions::with_label("y")).unwrap_err();
        assert!(matches!(err, DataError::EmptyAfterCleaning));
    }

    #[test]
    fn drop_and_infer_kinds() {
        let csv = "ESP,SEX,COW,AGEP,y\n1,0,a,30.5,1\n2,1,b,22,0\n,1,a,19,0\n";
        let opts = IngestOptions {
            transforms: vec![Transform::Drop {
                column: "ESP".into(),
            }],
            ..IngestOptions::with_label("y")
        };
        let (ds, report) = ingest(csv, &opts).unwrap();
        // ESP is dropped before missing-value deletion, so no row is lost
        assert_eq!(report.rows_removed, 0);
        assert_eq!(ds.feature_names(), vec!["SEX", "COW", "AGEP"]);
        let kinds: Vec<_> = ds.columns().iter().map(|c| c.kind).collect();
        assert_eq!(
            kinds,
            vec![
                ColumnKind::Binary,
                ColumnKind::Categorical,
                ColumnKind::Numeric
            ]
        );
        assert_eq!(ds.columns()[1].categories, vec!["a", "b"]);
    }

    #[test]
    fn optional_label_may_be_absent() {
        let opts = IngestOptions {
            require_label: false,
            ..IngestOptions::with_label("y")
        };
        let (ds, _) = ingest("a\n1\n2\n", &opts).unwrap();
        assert!(ds.labels().is_none());
    }

    #[test]
    fn fixed_categories_reject_unseen_values() {
        let opts = IngestOptions {
            columns: vec![ColumnDecl {
                name: "c".into(),
                kind: ColumnKind::Categorical,
                categories: Some(vec!["x".into(), "y".into()]),
            }],
            ..IngestOptions::with_label("lab")
        };
        assert!(ingest("c,lab\nx,0\ny,1\n", &opts).is_ok());
        assert!(matches!(
            ingest("c,lab\nz,0\n", &opts),
            Err(DataError::Parse { .. })
        ));
    }
}
