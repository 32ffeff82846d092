//! Run configuration, read from TOML.
//!
//! ```toml
//! version = 1
//!
//! [data]
//! source = "synthetic"
//! n_train = 2000
//! n_test = 500
//! pool_size = 20000
//! seed = 7
//!
//! [rashomon]
//! epsilon = 0.1
//! n_models = 200
//! strategy = { kind = "fresh_resample", sample_size = 2000 }
//!
//! [metrics]
//! flag_threshold = 0.3
//!
//! [output]
//! dir = "audit_out"
//! ```

use std::path::{Path, PathBuf};

use multiplicity_core::data::{
    generate_synthetic, ingest_csv, split_with_rest, Dataset, GaussianComponent, IngestOptions,
    SplitSpec, SyntheticSpec,
};
use multiplicity_core::metrics::default_deltas;
use multiplicity_core::multiplicity::Strategy;
use multiplicity_core::rashomon::{Baseline, RashomonConfig, Score};
use multiplicity_core::tree::ParamGrid;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::AuditError;

pub const CONFIG_VERSION: u32 = 1;
pub const TOOLKIT_VERSION: &str = env!("CARGO_PKG_VERSION");
pub const DEFAULT_FLAG_THRESHOLD: f64 = 0.3;
pub const DEFAULT_FOLDS: usize = 5;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default = "config_version")]
    pub version: u32,
    pub data: DataSource,
    /// Required for csv sources.
    #[serde(default)]
    pub split: Option<SplitSpec>,
    pub rashomon: RashomonSection,
    #[serde(default)]
    pub metrics: MetricsSection,
    #[serde(default)]
    pub output: OutputSection,
}

fn config_version() -> u32 {
    CONFIG_VERSION
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "source", rename_all = "snake_case")]
pub enum DataSource {
    Csv {
        /// Relative paths resolve against the config file's directory.
        path: PathBuf,
        #[serde(default)]
        ingest: IngestOptions,
    },
    /// Train, test and pool are disjoint draws from one generated sample.
    Synthetic {
        n_train: usize,
        n_test: usize,
        #[serde(default)]
        pool_size: usize,
        seed: u64,
        /// Defaults to the four-component mixture with one overlap region.
        #[serde(default)]
        components: Option<Vec<GaussianComponent>>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EpsilonPreset {
    /// 0.1
    Loose,
    /// 0.05
    Moderate,
    /// 0.02
    Tight,
}

impl EpsilonPreset {
    pub fn value(self) -> f64 {
        match self {
            EpsilonPreset::Loose => 0.1,
            EpsilonPreset::Moderate => 0.05,
            EpsilonPreset::Tight => 0.02,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BaselineChoice {
    CrossValidation {
        #[serde(default = "default_folds")]
        folds: usize,
    },
    GridBest,
}

fn default_folds() -> usize {
    DEFAULT_FOLDS
}

impl Default for BaselineChoice {
    fn default() -> Self {
        BaselineChoice::CrossValidation {
            folds: DEFAULT_FOLDS,
        }
    }
}

/// Which rows models are scored on for the threshold.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ThresholdOn {
    #[default]
    Test,
    /// A slice of the training rows, held out from training.
    Holdout,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RashomonSection {
    /// Exactly one of `epsilon` and `preset`.
    #[serde(default)]
    pub epsilon: Option<f64>,
    #[serde(default)]
    pub preset: Option<EpsilonPreset>,
    #[serde(default = "default_score")]
    pub score: Score,
    pub n_models: usize,
    #[serde(default)]
    pub grid: ParamGrid,
    pub strategy: Strategy,
    #[serde(default)]
    pub master_seed: u64,
    #[serde(default)]
    pub baseline: BaselineChoice,
    #[serde(default)]
    pub threshold_on: ThresholdOn,
    #[serde(default = "default_holdout")]
    pub holdout_fraction: f64,
}

fn default_score() -> Score {
    Score::Accuracy
}

fn default_holdout() -> f64 {
    0.2
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MetricsSection {
    #[serde(default = "default_deltas")]
    pub deltas: Vec<f64>,
    /// Rows with conflict strictly above this are flagged.
    #[serde(default = "default_flag")]
    pub flag_threshold: f64,
}

fn default_flag() -> f64 {
    DEFAULT_FLAG_THRESHOLD
}

impl Default for MetricsSection {
    fn default() -> Self {
        MetricsSection {
            deltas: default_deltas(),
            flag_threshold: DEFAULT_FLAG_THRESHOLD,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    #[serde(default = "default_dir")]
    pub dir: PathBuf,
    #[serde(default = "yes")]
    pub summary_text: bool,
    /// Also write the test rows in canonical form, for later `score` runs.
    #[serde(default = "yes")]
    pub test_csv: bool,
}

fn default_dir() -> PathBuf {
    PathBuf::from("audit_out")
}

fn yes() -> bool {
    true
}

impl Default for OutputSection {
    fn default() -> Self {
        OutputSection {
            dir: default_dir(),
            summary_text: true,
            test_csv: true,
        }
    }
}

/// Rows an audit works on. `pool` feeds fresh-resample strategies.
#[derive(Debug, Clone)]
pub struct PreparedData {
    pub train: Dataset,
    pub test: Dataset,
    pub pool: Option<Dataset>,
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self, AuditError> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| AuditError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Reads and validates `path`; relative data paths are resolved.
    pub fn load(path: &Path) -> Result<Self, AuditError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| AuditError::Config(format!("{}: {e}", path.display())))?;
        let mut cfg = Self::from_toml(&text)?;
        if let DataSource::Csv { path: data, .. } = &mut cfg.data {
            if data.is_relative() {
                if let Some(dir) = path.parent() {
                    *data = dir.join(&*data);
                }
            }
        }
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), AuditError> {
        let bad = |m: String| Err(AuditError::Config(m));
        if self.version != CONFIG_VERSION {
            return bad(format!(
                "config version {} (supported: {CONFIG_VERSION})",
                self.version
            ));
        }
        let f = self.metrics.flag_threshold;
        if !(0.0..=0.5).contains(&f) {
            return bad(format!("flag_threshold {f} outside [0, 0.5]"));
        }
        if self.metrics.deltas.iter().any(|d| !(0.0..=0.5).contains(d)) {
            return bad("deltas must lie in [0, 0.5]".into());
        }
        match (&self.data, &self.split) {
            (DataSource::Csv { .. }, None) => {
                return bad("csv sources need a [split] section".into())
            }
            (DataSource::Synthetic { .. }, Some(_)) => {
                return bad("synthetic sources are split by n_train / n_test; drop [split]".into())
            }
            _ => {}
        }
        if let DataSource::Synthetic {
            n_train, n_test, ..
        } = self.data
        {
            if n_train == 0 || n_test == 0 {
                return bad("n_train and n_test must be positive".into());
            }
        }
        let r = &self.rashomon;
        if r.epsilon.is_some() == r.preset.is_some() {
            return bad("set exactly one of rashomon.epsilon and rashomon.preset".into());
        }
        if r.threshold_on == ThresholdOn::Holdout
            && !(r.holdout_fraction > 0.0 && r.holdout_fraction < 1.0)
        {
            return bad(format!(
                "holdout_fraction {} outside (0, 1)",
                r.holdout_fraction
            ));
        }
        self.rashomon_config().validate()?;
        Ok(())
    }

    pub fn epsilon(&self) -> f64 {
        self.rashomon
            .epsilon
            .or(self.rashomon.preset.map(EpsilonPreset::value))
            .unwrap_or_default()
    }

    pub fn rashomon_config(&self) -> RashomonConfig {
        let r = &self.rashomon;
        RashomonConfig {
            epsilon: self.epsilon(),
            score: r.score,
            n_models: r.n_models,
            grid: r.grid.clone(),
            strategy: r.strategy.clone(),
            master_seed: r.master_seed,
            baseline: match r.baseline {
                BaselineChoice::CrossValidation { folds } => Baseline::CrossValidation { folds },
                BaselineChoice::GridBest => Baseline::GridBest,
            },
        }
    }

    pub fn with_seed(mut self, seed: Option<u64>) -> Self {
        if let Some(s) = seed {
            self.rashomon.master_seed = s;
        }
        self
    }

    /// Hash of every field plus the toolkit version.
    pub fn fingerprint(&self) -> String {
        let mut h = Sha256::new();
        h.update(TOOLKIT_VERSION.as_bytes());
        h.update([0]);
        h.update(
            serde_json::to_string(self)
                .expect("config serializes")
                .as_bytes(),
        );
        hex::encode(&h.finalize()[..16])
    }

    /// Loads or generates the data and cuts it into train, test and pool.
    pub fn prepare_data(&self) -> Result<PreparedData, AuditError> {
        let (train, test, pool) = match &self.data {
            DataSource::Csv { path, ingest } => {
                let (ds, _) = ingest_csv(path, ingest)?;
                let spec = self.split.as_ref().expect("validated");
                split_with_rest(&ds, spec)?
            }
            DataSource::Synthetic {
                n_train,
                n_test,
                pool_size,
                seed,
                components,
            } => {
                let mut spec = SyntheticSpec::default_mixture(n_train + n_test + pool_size, *seed);
                if let Some(c) = components {
                    spec.components = c.clone();
                }
                let (ds, _) = generate_synthetic(&spec)?;
                let split = SplitSpec {
                    train_fraction: 0.5,
                    seed: *seed,
                    fixed_sizes: Some((*n_train, *n_test)),
                };
                split_with_rest(&ds, &split)?
            }
        };
        Ok(PreparedData { train, test, pool })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
        [data]
        source = "synthetic"
        n_train = 50
        n_test = 20
        seed = 1

        [rashomon]
        epsilon = 0.1
        n_models = 4
        strategy = { kind = "bootstrap", sample_size = 30 }
    "#;

    #[test]
    fn defaults_fill_in() {
        let c = RunConfig::from_toml(MINIMAL).unwrap();
        assert_eq!(c.metrics.flag_threshold, 0.3);
        assert_eq!(c.metrics.deltas.len(), 21);
        assert_eq!(
            c.rashomon.baseline,
            BaselineChoice::CrossValidation { folds: 5 }
        );
        assert_eq!(c.rashomon.score, Score::Accuracy);
        assert_eq!(c.rashomon.threshold_on, ThresholdOn::Test);
        let d = c.prepare_data().unwrap();
        assert_eq!((d.train.n_rows(), d.test.n_rows()), (50, 20));
        assert!(d.pool.is_none());
    }

    #[test]
    fn preset_and_epsilon_are_exclusive() {
        let both = MINIMAL.replace("epsilon = 0.1", "epsilon = 0.1\npreset = \"tight\"");
        assert!(matches!(
            RunConfig::from_toml(&both),
            Err(AuditError::Config(_))
        ));
        let preset = MINIMAL.replace("epsilon = 0.1", "preset = \"tight\"");
        assert_eq!(RunConfig::from_toml(&preset).unwrap().epsilon(), 0.02);
        let neither = MINIMAL.replace("epsilon = 0.1", "");
        assert!(RunConfig::from_toml(&neither).is_err());
    }

    #[test]
    fn rejects_bad_values() {
        let flag = format!("{MINIMAL}\n[metrics]\nflag_threshold = 0.6\n");
        assert!(matches!(
            RunConfig::from_toml(&flag),
            Err(AuditError::Config(_))
        ));
        let unknown = MINIMAL.replace("n_models = 4", "n_models = 4\nmodels = 3");
        assert!(RunConfig::from_toml(&unknown).is_err());
        let eps = MINIMAL.replace("epsilon = 0.1", "epsilon = 1.5");
        assert!(RunConfig::from_toml(&eps).is_err());
    }

    #[test]
    fn fingerprint_tracks_every_field() {
        let base = RunConfig::from_toml(MINIMAL).unwrap();
        let same = RunConfig::from_toml(MINIMAL).unwrap();
        assert_eq!(base.fingerprint(), same.fingerprint());
        let variants = [
            base.clone().with_seed(Some(9)),
            RunConfig::from_toml(&MINIMAL.replace("n_models = 4", "n_models = 5")).unwrap(),
            RunConfig::from_toml(&MINIMAL.replace("seed = 1", "seed = 2")).unwrap(),
            RunConfig::from_toml(&format!("{MINIMAL}\n[output]\ndir = \"elsewhere\"\n")).unwrap(),
            RunConfig::from_toml(&format!("{MINIMAL}\n[metrics]\nflag_threshold = 0.25\n"))
                .unwrap(),
        ];
        for v in variants {
            assert_ne!(v.fingerprint(), base.fingerprint());
        }
    }

    #[test]
    fn pool_comes_from_the_same_generator() {
        let text = MINIMAL.replace("seed = 1", "seed = 1\npool_size = 100");
        let d = RunConfig::from_toml(&text).unwrap().prepare_data().unwrap();
        let pool = d.pool.unwrap();
        assert_eq!(pool.n_rows(), 100);
        assert!(pool
            .row_ids()
            .iter()
            .all(|id| !d.test.row_ids().contains(id)));
    }

    #[test]
    fn bundled_configs_load() {
        let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
        let mut n = 0;
        for entry in std::fs::read_dir(dir).unwrap() {
            let path = entry.unwrap().path();
            if path.extension().is_some_and(|e| e == "toml") {
                RunConfig::load(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
                n += 1;
            }
        }
        assert!(n >= 3);
    }
}
