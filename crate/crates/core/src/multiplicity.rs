//! Training-data variants that inject dataset multiplicity.
//!
//! Each model of a Rashomon set is trained on `derive(train, strategy,
//! seed_i)` with per-model seeds from [`derivation_plan`]. The test set is
//! never perturbed.

use std::borrow::Cow;
use std::collections::HashSet;

use rand::seq::index::sample;
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::data::{ColumnKind, Dataset};
use crate::seeds;

#[derive(Debug, Error, PartialEq)]
pub enum MultiplicityError {
    #[error("strategy does not fit the data: {0}")]
    Mismatch(String),
    #[error("n_models must be at least 1")]
    NoModels,
}

/// Units in which `numeric_sigma` is expressed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NoiseScale {
    /// Noise is added in z-score units of each column, then mapped back.
    #[default]
    Standardized,
    /// Noise is added in the column's own units.
    Raw,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind")]
pub enum Strategy {
    /// Every model sees the same training data.
    #[serde(alias = "none")]
    None,
    /// `sample_size` rows drawn with replacement from the training data.
    #[serde(alias = "bootstrap")]
    Bootstrap { sample_size: usize },
    /// Splits restricted to `keep` uniformly chosen features.
    #[serde(alias = "feature_subsample")]
    FeatureSubsample { keep: usize },
    /// Gaussian noise on ordered columns, random category switches on
    /// categorical and binary columns.
    #[serde(alias = "feature_noise")]
    FeatureNoise {
        numeric_sigma: f64,
        categorical_flip_prob: f64,
        #[serde(default)]
        scale: NoiseScale,
    },
    /// A fresh training set of `sample_size` rows drawn without
    /// replacement from a large pool.
    #[serde(alias = "fresh_resample")]
    FreshResample { sample_size: usize },
}

impl Strategy {
    pub fn name(&self) -> &'static str {
        match self {
            Strategy::None => "None",
            Strategy::Bootstrap { .. } => "Bootstrap",
            Strategy::FeatureSubsample { .. } => "FeatureSubsample",
            Strategy::FeatureNoise { .. } => "FeatureNoise",
            Strategy::FreshResample { .. } => "FreshResample",
        }
    }

    pub fn needs_pool(&self) -> bool {
        matches!(self, Strategy::FreshResample { .. })
    }

    /// Checks the strategy's parameters against a base of `n` rows and
    /// `d` features (and the pool, for fresh resampling).
    pub fn validate(
        &self,
        base: &Dataset,
        pool: Option<&Dataset>,
    ) -> Result<(), MultiplicityError> {
        let bad = |m: String| Err(MultiplicityError::Mismatch(m));
        match *self {
            Strategy::None => Ok(()),
            Strategy::Bootstrap { sample_size } => {
                if sample_size == 0 || base.is_empty() {
                    return bad("bootstrap needs sample_size >= 1 and a nonempty base".into());
                }
                Ok(())
            }
            Strategy::FeatureSubsample { keep } => {
                let d = base.n_features();
                if keep == 0 || keep > d {
                    return bad(format!("keep={keep} outside [1, {d}]"));
                }
                Ok(())
            }
            Strategy::FeatureNoise {
                numeric_sigma,
                categorical_flip_prob,
                ..
            } => {
                if !(numeric_sigma >= 0.0 && numeric_sigma.is_finite()) {
                    return bad(format!("numeric_sigma={numeric_sigma}"));
                }
                if !(0.0..=1.0).contains(&categorical_flip_prob) {
                    return bad(format!("categorical_flip_prob={categorical_flip_prob}"));
                }
                Ok(())
            }
            Strategy::FreshResample { sample_size } => {
                let Some(pool) = pool else {
                    return bad("fresh resampling needs a pool".into());
                };
                if sample_size == 0 || sample_size > pool.n_rows() {
                    return bad(format!(
                        "sample_size={sample_size} with a pool of {} rows",
                        pool.n_rows()
                    ));
                }
                if pool.columns() != base.columns() {
                    return bad("pool features differ from the training features".into());
                }
                Ok(())
            }
        }
    }
}

/// Training data for one model plus the features its splits may use.
#[derive(Debug, Clone)]
pub struct TrainingView<'a> {
    pub data: Cow<'a, Dataset>,
    /// Sorted feature indices available to splits.
    pub eligible: Vec<usize>,
}

/// Produces the training variant for one model.
///
/// Feature subsampling keeps the full-width data and narrows `eligible`,
/// so every model can still score rows of the shared test set.
pub fn derive<'a>(
    base: &'a Dataset,
    strategy: &Strategy,
    seed: u64,
    pool: Option<&'a Dataset>,
) -> Result<TrainingView<'a>, MultiplicityError> {
    strategy.validate(base, pool)?;
    let all: Vec<usize> = (0..base.n_features()).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let view = match *strategy {
        Strategy::None => TrainingView {
            data: Cow::Borrowed(base),
            eligible: all,
        },
        Strategy::Bootstrap { sample_size } => {
            let n = base.n_rows();
            let idx: Vec<usize> = (0..sample_size).map(|_| rng.random_range(0..n)).collect();
            TrainingView {
                data: Cow::Owned(base.select_rows(&idx)),
                eligible: all,
            }
        }
        Strategy::FeatureSubsample { keep } => {
            let mut eligible = sample(&mut rng, base.n_features(), keep).into_vec();
            eligible.sort_unstable();
            TrainingView {
                data: Cow::Borrowed(base),
                eligible,
            }
        }
        Strategy::FeatureNoise {
            numeric_sigma,
            categorical_flip_prob,
            scale,
        } => TrainingView {
            data: Cow::Owned(add_noise(
                base,
                numeric_sigma,
                categorical_flip_prob,
                scale,
                &mut rng,
            )),
            eligible: all,
        },
        Strategy::FreshResample { sample_size } => {
            let pool = pool.expect("validated");
            let idx = sample(&mut rng, pool.n_rows(), sample_size).into_vec();
            TrainingView {
                data: Cow::Owned(pool.select_rows(&idx)),
                eligible: all,
            }
        }
    };
    Ok(view)
}

fn add_noise(
    base: &Dataset,
    sigma: f64,
    flip: f64,
    scale: NoiseScale,
    rng: &mut impl RngCore,
) -> Dataset {
    let n = base.n_rows();
    let d = base.n_features();
    let col_scale: Vec<f64> = base
        .columns()
        .iter()
        .enumerate()
        .map(|(j, c)| {
            if !c.kind.is_ordered() || c.kind == ColumnKind::Binary {
                return 0.0;
            }
            match scale {
                NoiseScale::Raw => 1.0,
                NoiseScale::Standardized => column_std(base, j),
            }
        })
        .collect();
    let mut values = base.values().to_vec();
    for i in 0..n {
        for (j, col) in base.columns().iter().enumerate() {
            let v = &mut values[i * d + j];
            match col.kind {
                ColumnKind::Numeric | ColumnKind::Ordinal => {
                    if sigma > 0.0 {
                        let z: f64 = StandardNormal.sample(rng);
                        *v += sigma * col_scale[j] * z;
                    }
                }
                ColumnKind::Binary | ColumnKind::Categorical => {
                    let k = col.category_count();
                    if flip > 0.0 && k >= 2 && rng.random::<f64>() < flip {
                        let current = *v as usize;
                        let mut other = rng.random_range(0..k - 1);
                        if other >= current {
                            other += 1;
                        }
                        *v = other as f64;
                    }
                }
            }
        }
    }
    base.with_values(values)
}

fn column_std(ds: &Dataset, j: usize) -> f64 {
    let n = ds.n_rows() as f64;
    let mean = ds.rows().map(|r| r[j]).sum::<f64>() / n;
    let var = ds.rows().map(|r| (r[j] - mean).powi(2)).sum::<f64>() / n;
    var.sqrt()
}

/// Pairwise-distinct per-model seeds, stable for a fixed master seed.
pub fn derivation_plan(n_models: usize, master_seed: u64) -> Result<Vec<u64>, MultiplicityError> {
    if n_models == 0 {
        return Err(MultiplicityError::NoModels);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seeds::mix(master_seed, seeds::STREAM_DATA));
    let mut seen = HashSet::with_capacity(n_models);
    let mut out = Vec::with_capacity(n_models);
    while out.len() < n_models {
        let s = rng.next_u64();
        if seen.insert(s) {
            out.push(s);
        }
    }
    Ok(out)
}
