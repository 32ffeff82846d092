use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use multiplicity_core::data::{
    ingest_csv, read_canonical, schema_path_for, split, write_canonical, Column, ColumnDecl,
    Dataset, IngestOptions, SplitSpec, Undeclared,
};
use multiplicity_core::metrics::{
    ambiguity, ambiguity_curve, default_deltas, distance, profile_from_matrix, AmbiguityCurve,
    ConflictProfile,
};
use multiplicity_core::multiplicity::{derive, Strategy};
use multiplicity_core::rashomon::{
    build, cross_validate, load_set, predictions_matrix, save_set, Baseline, PredictionMatrix,
    RashomonSet, Score,
};

use crate::config::{DataSource, RunConfig, ThresholdOn, DEFAULT_FOLDS, TOOLKIT_VERSION};
use crate::report::{
    AuditReport, CurvePoint, DataSummary, FlaggedRow, SetSummary, REPORT_FORMAT, REPORT_VERSION,
};
use crate::AuditError;

pub const REPORT_JSON: &str = "report.json";
pub const REPORT_TXT: &str = "report.txt";
pub const PROFILE_CSV: &str = "profile.csv";
pub const CURVE_CSV: &str = "curve.csv";
pub const TEST_CSV: &str = "test.csv";
pub const SET_DIR: &str = "rashomon";
pub const DISTANCES_CSV: &str = "distances.csv";
pub const COMPARE_TXT: &str = "compare.txt";
pub const SCORED_CSV: &str = "scored.csv";
pub const PROBE_CSV: &str = "probe.csv";

/// Expected distance between two independent profiles of uniform
/// conflicts on [0, 0.5].
pub const UNIFORM_DISTANCE: f64 = 1.0 / 6.0;

fn create(path: &Path) -> Result<BufWriter<fs::File>, AuditError> {
    fs::File::create(path)
        .map(BufWriter::new)
        .map_err(|e| AuditError::io(path, e))
}

fn write_text(path: &Path, text: &str) -> Result<(), AuditError> {
    fs::write(path, text).map_err(|e| AuditError::io(path, e))
}

fn ensure_dir(dir: &Path) -> Result<(), AuditError> {
    fs::create_dir_all(dir).map_err(|e| AuditError::io(dir, e))
}

/// `SOURCE_DATE_EPOCH` if set, otherwise the clock.
fn now_unix() -> u64 {
    std::env::var("SOURCE_DATE_EPOCH")
        .ok()
        .and_then(|s| s.parse().ok())
        .unwrap_or_else(|| {
            std::time::SystemTime::now()
                .duration_since(std::time::UNIX_EPOCH)
                .map(|d| d.as_secs())
                .unwrap_or(0)
        })
}

fn score_name(score: Score) -> String {
    match score {
        Score::Accuracy => "accuracy".into(),
        Score::Penalized { lambda } => format!("penalized(lambda={lambda})"),
    }
}

#[derive(Debug, Clone)]
pub struct AuditOutcome {
    pub report: AuditReport,
    pub set: RashomonSet,
    pub profile: ConflictProfile,
    pub test: Dataset,
}

/// Generate or ingest, split, build the set, profile the test rows and
/// write every artifact under `out`.
pub fn run_audit(cfg: &RunConfig, out: &Path) -> Result<AuditOutcome, AuditError> {
    cfg.validate()?;
    let data = cfg.prepare_data()?;
    let rcfg = cfg.rashomon_config();
    let (fit, scoring) = match cfg.rashomon.threshold_on {
        ThresholdOn::Test => (data.train.clone(), data.test.clone()),
        ThresholdOn::Holdout => split(
            &data.train,
            &SplitSpec::fraction(1.0 - cfg.rashomon.holdout_fraction, rcfg.master_seed),
        )?,
    };
    let rs = build(&fit, &scoring, &rcfg, data.pool.as_ref())?;
    let matrix = predictions_matrix(&rs, &data.test)?;
    let profile = profile_from_matrix(&matrix, &data.test);
    let curve = ambiguity_curve(&profile, &cfg.metrics.deltas)?;
    let flagged = flag_rows(&profile, &matrix, cfg.metrics.flag_threshold);

    let report = AuditReport {
        format: REPORT_FORMAT.into(),
        report_version: REPORT_VERSION,
        toolkit_version: TOOLKIT_VERSION.into(),
        generated_at_unix: now_unix(),
        config_fingerprint: cfg.fingerprint(),
        flag_threshold: cfg.metrics.flag_threshold,
        data: DataSummary {
            source: match &cfg.data {
                DataSource::Csv { path, .. } => format!("csv {}", path.display()),
                DataSource::Synthetic { seed, .. } => format!("synthetic seed {seed}"),
            },
            n_train: fit.n_rows(),
            n_test: data.test.n_rows(),
            n_threshold_rows: scoring.n_rows(),
            features: data.test.feature_names(),
            test_fingerprint: data.test.fingerprint(),
        },
        rashomon: SetSummary {
            strategy: rcfg.strategy.name().into(),
            score: score_name(rs.score_kind()),
            epsilon: rs.epsilon(),
            baseline_score: rs.baseline().score,
            baseline_accuracy: rs.baseline().accuracy,
            threshold: rs.threshold(),
            candidate_count: rs.candidate_count(),
            member_count: rs.len(),
            warnings: rs.warnings().to_vec(),
        },
        standard_ambiguity: ambiguity(&profile, 0.0)?,
        curve: curve
            .points()
            .map(|(delta, ambiguity)| CurvePoint { delta, ambiguity })
            .collect(),
        flagged_count: flagged.len(),
        flagged,
    };

    ensure_dir(out)?;
    write_text(&out.join(REPORT_JSON), &report.to_json())?;
    if cfg.output.summary_text {
        write_text(&out.join(REPORT_TXT), &report.render_text())?;
    }
    let path = out.join(PROFILE_CSV);
    profile
        .write_csv(create(&path)?)
        .map_err(|e| AuditError::io(&path, e))?;
    let path = out.join(CURVE_CSV);
    curve
        .write_csv(create(&path)?)
        .map_err(|e| AuditError::io(&path, e))?;
    if cfg.output.test_csv {
        write_canonical(&data.test, &out.join(TEST_CSV))?;
    }
    save_set(&rs, &out.join(SET_DIR))?;
    Ok(AuditOutcome {
        report,
        set: rs,
        profile,
        test: data.test,
    })
}

fn flag_rows(
    profile: &ConflictProfile,
    matrix: &PredictionMatrix,
    threshold: f64,
) -> Vec<FlaggedRow> {
    profile
        .records()
        .iter()
        .enumerate()
        .filter(|(_, r)| r.conflict > threshold)
        .map(|(i, r)| FlaggedRow {
            row_id: r.row_id,
            n0: r.n0.unwrap_or_default(),
            n1: r.n1.unwrap_or_default(),
            conflict: r.conflict,
            ballot: matrix.ballot(i),
        })
        .collect()
}

/// Reads rows to score against `features`. A canonical CSV with a schema
/// sidecar is read as such; any other CSV is typed by the set's features.
/// Labels are optional.
pub fn load_rows(
    path: &Path,
    features: &[Column],
    id_column: Option<&str>,
) -> Result<Dataset, AuditError> {
    let ds = if schema_path_for(path).exists() {
        read_canonical(path)?
    } else {
        let opts = IngestOptions {
            require_label: false,
            id_column: id_column.map(str::to_string),
            columns: features
                .iter()
                .map(|c| ColumnDecl {
                    name: c.name.clone(),
                    kind: c.kind,
                    categories: (!c.categories.is_empty()).then(|| c.categories.clone()),
                })
                .collect(),
            undeclared: Undeclared::Ignore,
            ..IngestOptions::default()
        };
        ingest_csv(path, &opts)?.0
    };
    ds.check_same_features(features)?;
    Ok(ds)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScoredRow {
    pub row_id: u64,
    pub n0: u32,
    pub n1: u32,
    pub conflict: f64,
    pub flagged: bool,
    pub ballot: String,
}

/// Conflict of every row of `data` under a persisted set, flagged when
/// strictly above `delta`.
pub fn run_score(
    set_dir: &Path,
    data: &Path,
    delta: f64,
    id_column: Option<&str>,
) -> Result<Vec<ScoredRow>, AuditError> {
    if !(0.0..=0.5).contains(&delta) {
        return Err(AuditError::Config(format!(
            "delta {delta} outside [0, 0.5]"
        )));
    }
    let rs = load_set(set_dir)?;
    let ds = load_rows(data, rs.features(), id_column)?;
    let matrix = predictions_matrix(&rs, &ds)?;
    let profile = profile_from_matrix(&matrix, &ds);
    Ok(profile
        .records()
        .iter()
        .enumerate()
        .map(|(i, r)| ScoredRow {
            row_id: r.row_id,
            n0: r.n0.unwrap_or_default(),
            n1: r.n1.unwrap_or_default(),
            conflict: r.conflict,
            flagged: r.conflict > delta,
            ballot: matrix.ballot(i),
        })
        .collect())
}

pub fn write_scored<W: Write>(rows: &[ScoredRow], mut w: W) -> std::io::Result<()> {
    writeln!(w, "row_id,n0,n1,conflict,flagged,ballot")?;
    for r in rows {
        writeln!(
            w,
            "{},{},{},{},{},{}",
            r.row_id, r.n0, r.n1, r.conflict, r.flagged as u8, r.ballot
        )?;
    }
    Ok(())
}

#[derive(Debug, Clone)]
pub struct Comparison {
    pub names: Vec<String>,
    /// Symmetric, zero diagonal.
    pub distances: Vec<Vec<f64>>,
    pub curves: Vec<AmbiguityCurve>,
}

impl Comparison {
    pub fn write_distances<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "set,{}", self.names.join(","))?;
        for (name, row) in self.names.iter().zip(&self.distances) {
            let cells: Vec<String> = row.iter().map(f64::to_string).collect();
            writeln!(w, "{name},{}", cells.join(","))?;
        }
        Ok(())
    }

    /// One line per pair, placing the distance against the uniform level.
    pub fn note(&self) -> String {
        let mut s = format!(
            "Distances are mean absolute conflict differences. Two unrelated profiles of uniform conflicts sit at {UNIFORM_DISTANCE:.4}.\n"
        );
        for i in 0..self.names.len() {
            for j in i + 1..self.names.len() {
                let d = self.distances[i][j];
                let side = if d < UNIFORM_DISTANCE {
                    "below"
                } else {
                    "at or above"
                };
                s += &format!(
                    "{} vs {}: {d:.4}, {side} the uniform level ({:.0}% of it)\n",
                    self.names[i],
                    self.names[j],
                    100.0 * d / UNIFORM_DISTANCE
                );
            }
        }
        s
    }
}

fn set_names(dirs: &[PathBuf]) -> Vec<String> {
    let base: Vec<String> = dirs
        .iter()
        .map(|d| {
            let name = d
                .file_name()
                .map(|n| n.to_string_lossy().into_owned())
                .unwrap_or_default();
            let name = if name == SET_DIR || name.is_empty() {
                d.parent()
                    .and_then(|p| p.file_name())
                    .map(|n| n.to_string_lossy().into_owned())
                    .unwrap_or(name)
            } else {
                name
            };
            name.replace(',', "_")
        })
        .collect();
    base.iter()
        .enumerate()
        .map(|(i, n)| {
            if base.iter().filter(|m| *m == n).count() > 1 {
                format!("{n}#{i}")
            } else {
                n.clone()
            }
        })
        .collect()
}

/// Profiles one shared dataset under every set and compares them pairwise.
pub fn run_compare(
    dirs: &[PathBuf],
    data: &Path,
    id_column: Option<&str>,
) -> Result<Comparison, AuditError> {
    if dirs.len() < 2 {
        return Err(AuditError::Config("compare needs at least two sets".into()));
    }
    let sets: Vec<RashomonSet> = dirs.iter().map(|d| load_set(d)).collect::<Result<_, _>>()?;
    for (d, s) in dirs.iter().zip(&sets).skip(1) {
        if s.features() != sets[0].features() {
            return Err(AuditError::Data(format!(
                "{} was trained on different features than {}",
                d.display(),
                dirs[0].display()
            )));
        }
    }
    let ds = load_rows(data, sets[0].features(), id_column)?;
    let profiles: Vec<ConflictProfile> = sets
        .iter()
        .map(|s| Ok(profile_from_matrix(&predictions_matrix(s, &ds)?, &ds)))
        .collect::<Result<_, AuditError>>()?;
    let k = sets.len();
    let mut distances = vec![vec![0.0; k]; k];
    for i in 0..k {
        for j in i + 1..k {
            let d = distance(&profiles[i], &profiles[j])?;
            distances[i][j] = d;
            distances[j][i] = d;
        }
    }
    let deltas = default_deltas();
    let curves = profiles
        .iter()
        .map(|p| ambiguity_curve(p, &deltas))
        .collect::<Result<_, _>>()?;
    Ok(Comparison {
        names: set_names(dirs),
        distances,
        curves,
    })
}

pub fn write_comparison(c: &Comparison, out: &Path) -> Result<(), AuditError> {
    ensure_dir(out)?;
    let path = out.join(DISTANCES_CSV);
    c.write_distances(create(&path)?)
        .map_err(|e| AuditError::io(&path, e))?;
    for (i, (name, curve)) in c.names.iter().zip(&c.curves).enumerate() {
        let path = out.join(format!("curve_{i}_{}.csv", name.replace(['/', '#'], "_")));
        curve
            .write_csv(create(&path)?)
            .map_err(|e| AuditError::io(&path, e))?;
    }
    write_text(&out.join(COMPARE_TXT), &c.note())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProbeRow {
    pub size: usize,
    /// Best mean cross-validated score over the grid, averaged over repeats.
    pub best_score: f64,
}

/// For each size, subsamples the training rows without replacement and
/// records the best cross-validated grid score.
pub fn run_probe(
    cfg: &RunConfig,
    sizes: &[usize],
    repeats: usize,
) -> Result<Vec<ProbeRow>, AuditError> {
    if sizes.is_empty() {
        return Err(AuditError::Config("no sample sizes given".into()));
    }
    if repeats == 0 {
        return Err(AuditError::Config("repeats must be at least 1".into()));
    }
    cfg.validate()?;
    let data = cfg.prepare_data()?;
    let train = &data.train;
    if let Some(&too_big) = sizes.iter().find(|&&s| s > train.n_rows() || s == 0) {
        return Err(AuditError::Data(format!(
            "sample size {too_big} with {} training rows",
            train.n_rows()
        )));
    }
    let rcfg = cfg.rashomon_config();
    let folds = match rcfg.baseline {
        Baseline::CrossValidation { folds } => folds,
        _ => DEFAULT_FOLDS,
    };
    sizes
        .iter()
        .map(|&size| {
            let mut total = 0.0;
            for r in 0..repeats {
                let seed = rcfg.master_seed.wrapping_add(r as u64);
                let view = derive(
                    train,
                    &Strategy::FreshResample { sample_size: size },
                    seed,
                    Some(train),
                )?;
                total += cross_validate(&view.data, &rcfg.grid, folds, rcfg.score, seed)?.1;
            }
            Ok(ProbeRow {
                size,
                best_score: total / repeats as f64,
            })
        })
        .collect()
}

pub fn write_probe<W: Write>(rows: &[ProbeRow], mut w: W) -> std::io::Result<()> {
    writeln!(w, "size,best_score")?;
    for r in rows {
        writeln!(w, "{},{}", r.size, r.best_score)?;
    }
    Ok(())
}
