//! Predictive multiplicity for decision trees.
//!
//! The crate builds approximate Rashomon sets (all models scoring within
//! `epsilon` of a baseline) by training many CART trees under data and
//! hyperparameter variation, then measures how much the members disagree:
//! per-row conflict ratios, dataset-level delta-ambiguity, and the mean
//! conflict distance between two sets. An exhaustive enumerator over small
//! binary-feature trees provides ground truth for the approximation.
//!
//! ```
//! use multiplicity_core::data::{generate_synthetic, SyntheticSpec};
//! use multiplicity_core::metrics::{ambiguity, conflict_profile};
//! use multiplicity_core::multiplicity::Strategy;
//! use multiplicity_core::rashomon::{build, Baseline, RashomonConfig, Score};
//! use multiplicity_core::tree::ParamGrid;
//!
//! let (train, _) = generate_synthetic(&SyntheticSpec::default_mixture(400, 1)).unwrap();
//! let (test, _) = generate_synthetic(&SyntheticSpec::default_mixture(200, 2)).unwrap();
//! let cfg = RashomonConfig {
//!     epsilon: 0.1,
//!     score: Score::Accuracy,
//!     n_models: 20,
//!     grid: ParamGrid::default(),
//!     strategy: Strategy::Bootstrap { sample_size: 200 },
//!     master_seed: 7,
//!     baseline: Baseline::GridBest,
//! };
//! let set = build(&train, &test, &cfg, None).unwrap();
//! let profile = conflict_profile(&set, &test).unwrap();
//! let standard = ambiguity(&profile, 0.0).unwrap();
//! assert!((0.0..=1.0).contains(&standard));
//! ```

pub mod data;
pub mod metrics;
pub mod multiplicity;
pub mod oracle;
pub mod rashomon;
pub mod tree;

pub(crate) mod seeds;
