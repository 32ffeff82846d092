//! Ad-hoc Rashomon sets: train many trees under data and hyperparameter
//! variation, then keep every tree whose score is within `epsilon` of the
//! best (baseline) tree.

mod persist;

pub use persist::{load_set, save_set, SET_FORMAT};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::data::{Column, DataError, Dataset};
use crate::multiplicity::{derivation_plan, derive, MultiplicityError, Strategy};
use crate::seeds;
use crate::tree::{
    penalized, sample_grid, train, train_view, DecisionTree, ParamGrid, TreeError, TreeParams,
};

/// Slack on `score >= threshold` comparisons, absorbing rounding in
/// `acc - lambda * leaves`.
pub const SCORE_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Error)]
pub enum RashomonError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Tree(#[from] TreeError),
    #[error(transparent)]
    Multiplicity(#[from] MultiplicityError),
    #[error(transparent)]
    Data(#[from] DataError),
    #[error("no model meets the threshold {threshold}")]
    Empty { threshold: f64 },
    #[error("score {score} is below the set threshold {threshold}")]
    BelowThreshold { score: f64, threshold: f64 },
    #[error("persistence error: {0}")]
    Persist(String),
}

/// How models are ranked against the threshold.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Score {
    Accuracy,
    /// acc(g) - lambda * H(g)
    Penalized {
        lambda: f64,
    },
}

impl Score {
    pub fn lambda(self) -> f64 {
        match self {
            Score::Accuracy => 0.0,
            Score::Penalized { lambda } => lambda,
        }
    }

    /// Returns `(score, accuracy)` of `tree` on `ds`.
    pub fn evaluate(self, tree: &DecisionTree, ds: &Dataset) -> Result<(f64, f64), TreeError> {
        let acc = tree.accuracy(ds)?;
        Ok((self.from_accuracy(acc, tree.leaf_count()), acc))
    }

    pub fn from_accuracy(self, accuracy: f64, leaves: usize) -> f64 {
        match self {
            Score::Accuracy => accuracy,
            Score::Penalized { lambda } => penalized(accuracy, leaves, lambda),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Baseline {
    /// Grid cell with the best mean fold score, retrained on all training
    /// rows. The retrained tree joins the candidate pool.
    CrossValidation { folds: usize },
    /// Every grid cell trained on all training rows; the best test score
    /// wins and joins the candidate pool.
    GridBest,
    /// A reference model from elsewhere. It anchors the threshold but is
    /// not a member of the set.
    External(DecisionTree),
}

#[derive(Debug, Clone, PartialEq)]
pub struct RashomonConfig {
    pub epsilon: f64,
    pub score: Score,
    pub n_models: usize,
    pub grid: ParamGrid,
    pub strategy: Strategy,
    pub master_seed: u64,
    pub baseline: Baseline,
}

impl RashomonConfig {
    pub fn validate(&self) -> Result<(), RashomonError> {
        let bad = |m: String| Err(RashomonError::Config(m));
        if !(0.0..=1.0).contains(&self.epsilon) {
            return bad(format!("epsilon {} outside [0, 1]", self.epsilon));
        }
        if self.n_models == 0 {
            return bad("n_models must be >= 1".into());
        }
        if let Score::Penalized { lambda } = self.score {
            if !(lambda >= 0.0 && lambda.is_finite()) {
                return bad(format!("lambda {lambda}"));
            }
        }
        if let Baseline::CrossValidation { folds } = self.baseline {
            if folds < 2 {
                return bad(format!("cross-validation needs >= 2 folds, got {folds}"));
            }
        }
        self.grid.validate()?;
        Ok(())
    }

    /// Stable hash of every field, used to tag persisted sets.
    pub fn fingerprint(&self) -> String {
        let text = format!("{self:?}");
        hex::encode(&Sha256::digest(text.as_bytes())[..16])
    }
}

/// Where a member came from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "origin", rename_all = "snake_case")]
pub enum Provenance {
    /// One of the `n_models` trained candidates.
    Candidate {
        index: usize,
        data_seed: u64,
        params: TreeParams,
    },
    /// The tree selected by cross-validation or grid search.
    Baseline { params: TreeParams },
    /// Supplied by the caller.
    External,
    /// Produced by exhaustive enumeration, in canonical order.
    Enumerated { index: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Member {
    pub tree: DecisionTree,
    pub score: f64,
    pub accuracy: f64,
    pub provenance: Provenance,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SetKind {
    AdHoc,
    Exhaustive,
}

/// Whether the threshold came from this set's own baseline or was shared
/// across several sets built side by side.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ThresholdSource {
    Own,
    Shared,
}

/// R(H, g0, eps): models scoring at least `score(g0) - eps`.
#[derive(Debug, Clone, PartialEq)]
pub struct RashomonSet {
    pub(crate) kind: SetKind,
    pub(crate) baseline: Member,
    pub(crate) epsilon: f64,
    pub(crate) score: Score,
    pub(crate) threshold: f64,
    pub(crate) threshold_source: ThresholdSource,
    pub(crate) members: Vec<Member>,
    pub(crate) candidate_count: usize,
    pub(crate) features: Vec<Column>,
    pub(crate) config_hash: String,
    pub(crate) warnings: Vec<String>,
}

impl RashomonSet {
    /// Filters `considered` against `baseline.score - epsilon`.
    ///
    /// The threshold is fixed here, before filtering, and never re-derived
    /// from the members.
    #[allow(clippy::too_many_arguments)]
    pub fn assemble(
        kind: SetKind,
        baseline: Member,
        considered: Vec<Member>,
        epsilon: f64,
        score: Score,
        threshold_source: ThresholdSource,
        features: Vec<Column>,
        config_hash: String,
    ) -> Result<Self, RashomonError> {
        let threshold = baseline.score - epsilon;
        let candidate_count = considered.len();
        let members: Vec<Member> = considered
            .into_iter()
            .filter(|m| m.score >= threshold - SCORE_TOLERANCE)
            .collect();
        if members.is_empty() {
            return Err(RashomonError::Empty { threshold });
        }
        let mut warnings = Vec::new();
        let trained = members
            .iter()
            .filter(|m| {
                matches!(
                    m.provenance,
                    Provenance::Candidate { .. } | Provenance::Enumerated { .. }
                )
            })
            .count();
        if trained == 0 {
            warnings
                .push("every candidate failed the threshold; only the baseline qualifies".into());
        }
        Ok(RashomonSet {
            kind,
            baseline,
            epsilon,
            score,
            threshold,
            threshold_source,
            members,
            candidate_count,
            features,
            config_hash,
            warnings,
        })
    }

    pub fn kind(&self) -> SetKind {
        self.kind
    }

    pub fn baseline(&self) -> &Member {
        &self.baseline
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn score_kind(&self) -> Score {
        self.score
    }

    pub fn threshold(&self) -> f64 {
        self.threshold
    }

    pub fn threshold_source(&self) -> ThresholdSource {
        self.threshold_source
    }

    pub fn members(&self) -> &[Member] {
        &self.members
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    /// Number of models checked against the threshold.
    pub fn candidate_count(&self) -> usize {
        self.candidate_count
    }

    pub fn features(&self) -> &[Column] {
        &self.features
    }

    pub fn config_hash(&self) -> &str {
        &self.config_hash
    }

    pub fn warnings(&self) -> &[String] {
        &self.warnings
    }

    /// Adds a member that meets the existing threshold.
    pub fn push_member(&mut self, member: Member) -> Result<(), RashomonError> {
        if member.score < self.threshold - SCORE_TOLERANCE {
            return Err(RashomonError::BelowThreshold {
                score: member.score,
                threshold: self.threshold,
            });
        }
        self.members.push(member);
        Ok(())
    }

    /// The set restricted to its first `k` members (same threshold).
    pub fn truncated(&self, k: usize) -> RashomonSet {
        let mut out = self.clone();
        out.members.truncate(k.max(1));
        out
    }
}

/// |R| x |D| matrix of hard predictions, member-major.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PredictionMatrix {
    n_members: usize,
    n_rows: usize,
    data: Vec<u8>,
}

impl PredictionMatrix {
    pub fn n_members(&self) -> usize {
        self.n_members
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn get(&self, member: usize, row: usize) -> u8 {
        self.data[member * self.n_rows + row]
    }

    pub fn member_row(&self, member: usize) -> &[u8] {
        &self.data[member * self.n_rows..(member + 1) * self.n_rows]
    }

    /// n1(x, R) for every row: the column sums.
    pub fn positive_votes(&self) -> Vec<u32> {
        let mut votes = vec![0u32; self.n_rows];
        for m in 0..self.n_members {
            for (v, &p) in votes.iter_mut().zip(self.member_row(m)) {
                *v += u32::from(p);
            }
        }
        votes
    }

    /// The members' votes on one row as a 0/1 string, in member order.
    pub fn ballot(&self, row: usize) -> String {
        (0..self.n_members)
            .map(|m| if self.get(m, row) == 1 { '1' } else { '0' })
            .collect()
    }
}

/// Every member's prediction on every row of `ds`.
pub fn predictions_matrix(
    rs: &RashomonSet,
    ds: &Dataset,
) -> Result<PredictionMatrix, RashomonError> {
    ds.check_same_features(&rs.features)?;
    let rows: Vec<Vec<u8>> = rs
        .members
        .par_iter()
        .map(|m| m.tree.predict_all(ds))
        .collect::<Result<_, _>>()?;
    Ok(PredictionMatrix {
        n_members: rows.len(),
        n_rows: ds.n_rows(),
        data: rows.concat(),
    })
}

/// Selects g0 for `cfg.baseline`, scored on `test`.
pub fn find_baseline(
    train_set: &Dataset,
    test: &Dataset,
    cfg: &RashomonConfig,
) -> Result<Member, RashomonError> {
    cfg.validate()?;
    if train_set.is_empty() || test.is_empty() {
        return Err(TreeError::EmptyDataset.into());
    }
    match &cfg.baseline {
        Baseline::External(tree) => {
            let (score, accuracy) = cfg.score.evaluate(tree, test)?;
            Ok(Member {
                tree: tree.clone(),
                score,
                accuracy,
                provenance: Provenance::External,
            })
        }
        Baseline::GridBest => {
            let scored: Vec<Member> = grid_cells(&cfg.grid)?
                .into_par_iter()
                .map(|p| {
                    let tree = train(train_set, &p)?;
                    let (score, accuracy) = cfg.score.evaluate(&tree, test)?;
                    Ok(Member {
                        tree,
                        score,
                        accuracy,
                        provenance: Provenance::Baseline { params: p },
                    })
                })
                .collect::<Result<_, RashomonError>>()?;
            Ok(argmax(scored).expect("grid is nonempty"))
        }
        Baseline::CrossValidation { folds } => {
            let params =
                cross_validate(train_set, &cfg.grid, *folds, cfg.score, cfg.master_seed)?.0;
            let tree = train(train_set, &params)?;
            let (score, accuracy) = cfg.score.evaluate(&tree, test)?;
            Ok(Member {
                tree,
                score,
                accuracy,
                provenance: Provenance::Baseline { params },
            })
        }
    }
}

fn grid_cells(grid: &ParamGrid) -> Result<Vec<TreeParams>, RashomonError> {
    grid.validate()?;
    Ok(grid.cells())
}

/// First member with the highest score.
fn argmax(members: Vec<Member>) -> Option<Member> {
    members
        .into_iter()
        .reduce(|best, m| if m.score > best.score { m } else { best })
}

/// k-fold cross-validation over every grid cell. Returns the cell with the
/// best mean held-out score (first in grid order on ties) and that score.
pub fn cross_validate(
    ds: &Dataset,
    grid: &ParamGrid,
    folds: usize,
    score: Score,
    master_seed: u64,
) -> Result<(TreeParams, f64), RashomonError> {
    if folds < 2 || folds > ds.n_rows() {
        return Err(RashomonError::Config(format!(
            "{folds} folds for {} rows",
            ds.n_rows()
        )));
    }
    let fold_sets = fold_splits(ds, folds, master_seed);
    let cells = grid_cells(grid)?;
    let means: Vec<f64> = cells
        .par_iter()
        .map(|p| {
            let mut total = 0.0;
            for (tr, va) in &fold_sets {
                let tree = train(tr, p)?;
                total += score.evaluate(&tree, va)?.0;
            }
            Ok(total / folds as f64)
        })
        .collect::<Result<_, RashomonError>>()?;
    let (best, mean) =
        means.iter().enumerate().fold(
            (0, f64::NEG_INFINITY),
            |acc, (i, &m)| if m > acc.1 { (i, m) } else { acc },
        );
    Ok((cells[best].clone(), mean))
}

fn fold_splits(ds: &Dataset, folds: usize, master_seed: u64) -> Vec<(Dataset, Dataset)> {
    use rand::seq::SliceRandom;
    use rand::SeedableRng;
    let mut order: Vec<usize> = (0..ds.n_rows()).collect();
    order.shuffle(&mut rand_chacha::ChaCha8Rng::seed_from_u64(seeds::mix(
        master_seed,
        seeds::STREAM_FOLDS,
    )));
    (0..folds)
        .map(|k| {
            let (va, tr): (Vec<_>, Vec<_>) = order
                .iter()
                .enumerate()
                .partition(|(pos, _)| pos % folds == k);
            let tr: Vec<usize> = tr.into_iter().map(|(_, &i)| i).collect();
            let va: Vec<usize> = va.into_iter().map(|(_, &i)| i).collect();
            (ds.select_rows(&tr), ds.select_rows(&va))
        })
        .collect()
}

/// Trains the `n_models` candidates: model `i` sees
/// `derive(train, strategy, seed_i)` and uses grid cell `i`.
pub fn train_candidates(
    train_set: &Dataset,
    test: &Dataset,
    cfg: &RashomonConfig,
    pool: Option<&Dataset>,
) -> Result<Vec<Member>, RashomonError> {
    cfg.validate()?;
    cfg.strategy.validate(train_set, pool)?;
    test.check_same_features(train_set.columns())?;
    let data_seeds = derivation_plan(cfg.n_models, cfg.master_seed)?;
    let params = sample_grid(&cfg.grid, cfg.n_models, cfg.master_seed)?;
    data_seeds
        .into_par_iter()
        .zip(params)
        .enumerate()
        .map(|(index, (data_seed, p))| {
            let view = derive(train_set, &cfg.strategy, data_seed, pool)?;
            let tree = train_view(&view, &p)?;
            let (score, accuracy) = cfg.score.evaluate(&tree, test)?;
            Ok(Member {
                tree,
                score,
                accuracy,
                provenance: Provenance::Candidate {
                    index,
                    data_seed,
                    params: p,
                },
            })
        })
        .collect()
}

/// Baseline plus candidates for one configuration, before filtering.
struct Population {
    reference: Member,
    considered: Vec<Member>,
}

fn population(
    train_set: &Dataset,
    test: &Dataset,
    cfg: &RashomonConfig,
    pool: Option<&Dataset>,
) -> Result<Population, RashomonError> {
    let found = find_baseline(train_set, test, cfg)?;
    let mut considered = Vec::with_capacity(cfg.n_models + 1);
    let reference = if matches!(cfg.baseline, Baseline::External(_)) {
        found
    } else {
        considered.push(found.clone());
        found
    };
    considered.extend(train_candidates(train_set, test, cfg, pool)?);
    Ok(Population {
        reference,
        considered,
    })
}

/// Draws from a pool no larger than `sample_size * n_models` overlap, so
/// models share the pool's own label noise instead of seeing new data.
fn pool_warning(cfg: &RashomonConfig, pool: Option<&Dataset>) -> Option<String> {
    match (&cfg.strategy, pool) {
        (Strategy::FreshResample { sample_size }, Some(p))
            if p.n_rows() <= sample_size * cfg.n_models =>
        {
            Some(format!(
                "pool of {} rows is not larger than sample_size x n_models = {}; draws overlap",
                p.n_rows(),
                sample_size * cfg.n_models
            ))
        }
        _ => None,
    }
}

/// g0 is the best of the reference model and everything considered;
/// the reference wins ties.
fn best_of(reference: &Member, considered: &[Member]) -> Member {
    let mut best = reference;
    for m in considered {
        if m.score > best.score {
            best = m;
        }
    }
    best.clone()
}

/// Builds the ad-hoc Rashomon set for one configuration.
pub fn build(
    train_set: &Dataset,
    test: &Dataset,
    cfg: &RashomonConfig,
    pool: Option<&Dataset>,
) -> Result<RashomonSet, RashomonError> {
    let pop = population(train_set, test, cfg, pool)?;
    let g0 = best_of(&pop.reference, &pop.considered);
    let mut rs = RashomonSet::assemble(
        SetKind::AdHoc,
        g0,
        pop.considered,
        cfg.epsilon,
        cfg.score,
        ThresholdSource::Own,
        train_set.columns().to_vec(),
        cfg.fingerprint(),
    )?;
    rs.warnings.extend(pool_warning(cfg, pool));
    Ok(rs)
}

/// Builds one set per configuration with a single threshold: the best
/// score found by any of them, minus each configuration's epsilon.
///
/// All configurations must share the score kind.
pub fn build_shared(
    train_set: &Dataset,
    test: &Dataset,
    configs: &[(&RashomonConfig, Option<&Dataset>)],
) -> Result<Vec<RashomonSet>, RashomonError> {
    let Some((first, _)) = configs.first() else {
        return Err(RashomonError::Config("no configurations".into()));
    };
    if configs.iter().any(|(c, _)| c.score != first.score) {
        return Err(RashomonError::Config(
            "shared thresholds need one score kind".into(),
        ));
    }
    let pops: Vec<Population> = configs
        .iter()
        .map(|(cfg, pool)| population(train_set, test, cfg, *pool))
        .collect::<Result<_, _>>()?;
    let mut g0 = best_of(&pops[0].reference, &pops[0].considered);
    for p in &pops[1..] {
        let cand = best_of(&p.reference, &p.considered);
        if cand.score > g0.score {
            g0 = cand;
        }
    }
    pops.into_iter()
        .zip(configs)
        .map(|(p, (cfg, pool))| {
            let mut rs = RashomonSet::assemble(
                SetKind::AdHoc,
                g0.clone(),
                p.considered,
                cfg.epsilon,
                cfg.score,
                ThresholdSource::Shared,
                train_set.columns().to_vec(),
                cfg.fingerprint(),
            )?;
            rs.warnings.extend(pool_warning(cfg, *pool));
            Ok(rs)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{generate_synthetic, SyntheticSpec};
    use crate::tree::Criterion;

    fn small_cfg(epsilon: f64, strategy: Strategy, baseline: Baseline) -> RashomonConfig {
        RashomonConfig {
            epsilon,
            score: Score::Accuracy,
            n_models: 24,
            grid: ParamGrid {
                depths: vec![1, 2, 3, 4],
                criteria: vec![Criterion::Gini, Criterion::Entropy],
                seeds: vec![0, 1, 2],
                ..ParamGrid::default()
            },
            strategy,
            master_seed: 11,
            baseline,
        }
    }

    fn data() -> (Dataset, Dataset) {
        let (tr, _) = generate_synthetic(&SyntheticSpec::default_mixture(300, 1)).unwrap();
        let (te, _) = generate_synthetic(&SyntheticSpec::default_mixture(150, 2)).unwrap();
        (tr, te)
    }

    #[test]
    fn vacuous_epsilon_keeps_everything() {
        let (tr, te) = data();
        let cfg = small_cfg(
            1.0,
            Strategy::Bootstrap { sample_size: 150 },
            Baseline::GridBest,
        );
        let rs = build(&tr, &te, &cfg, None).unwrap();
        assert_eq!(rs.candidate_count(), 25);
        assert_eq!(rs.len(), 25);
    }

    #[test]
    fn zero_epsilon_keeps_only_ties() {
        let (tr, te) = data();
        let cfg = small_cfg(
            0.0,
            Strategy::Bootstrap { sample_size: 150 },
            Baseline::GridBest,
        );
        let rs = build(&tr, &te, &cfg, None).unwrap();
        assert!(!rs.is_empty());
        for m in rs.members() {
            assert_eq!(m.score, rs.baseline().score);
        }
    }

    #[test]
    fn members_meet_threshold_and_baseline_is_max() {
        let (tr, te) = data();
        let cfg = small_cfg(
            0.05,
            Strategy::Bootstrap { sample_size: 150 },
            Baseline::CrossValidation { folds: 3 },
        );
        let rs = build(&tr, &te, &cfg, None).unwrap();
        let all = train_candidates(&tr, &te, &cfg, None).unwrap();
        assert!(all.iter().all(|m| m.score <= rs.baseline().score));
        assert!(rs
            .members()
            .iter()
            .all(|m| m.score >= rs.threshold() - SCORE_TOLERANCE));
        assert_eq!(rs.threshold(), rs.baseline().score - 0.05);
    }

    #[test]
    fn build_is_deterministic() {
        let (tr, te) = data();
        let cfg = small_cfg(
            0.1,
            Strategy::FeatureSubsample { keep: 1 },
            Baseline::GridBest,
        );
        assert_eq!(
            build(&tr, &te, &cfg, None).unwrap(),
            build(&tr, &te, &cfg, None).unwrap()
        );
    }

    #[test]
    fn grid_best_picks_argmax() {
        let (tr, te) = data();
        let cfg = small_cfg(0.1, Strategy::None, Baseline::GridBest);
        let g0 = find_baseline(&tr, &te, &cfg).unwrap();
        for p in cfg.grid.cells() {
            let t = train(&tr, &p).unwrap();
            assert!(t.accuracy(&te).unwrap() <= g0.accuracy);
        }
    }

    #[test]
    fn singleton_grid_baseline_is_that_cell() {
        let (tr, te) = data();
        let mut cfg = small_cfg(0.1, Strategy::None, Baseline::CrossValidation { folds: 4 });
        cfg.grid = ParamGrid {
            depths: vec![3],
            criteria: vec![Criterion::Entropy],
            seeds: vec![5],
            ..ParamGrid::default()
        };
        let g0 = find_baseline(&tr, &te, &cfg).unwrap();
        assert_eq!(
            g0.tree,
            train(&tr, &TreeParams::new(3, Criterion::Entropy, 5)).unwrap()
        );
    }

    #[test]
    fn external_baseline_is_not_a_member() {
        let (tr, te) = data();
        let reference = DecisionTree::constant(0, tr.feature_names());
        let cfg = small_cfg(1.0, Strategy::None, Baseline::External(reference.clone()));
        let rs = build(&tr, &te, &cfg, None).unwrap();
        assert_eq!(rs.len(), 24);
        assert!(rs
            .members()
            .iter()
            .all(|m| m.provenance != Provenance::External));
        // trained trees beat the constant model, so g0 moved to a candidate
        assert_ne!(rs.baseline().tree, reference);
    }

    #[test]
    fn push_member_respects_threshold() {
        let (tr, te) = data();
        let cfg = small_cfg(0.0, Strategy::None, Baseline::GridBest);
        let mut rs = build(&tr, &te, &cfg, None).unwrap();
        let t = rs.threshold();
        let weak = Member {
            tree: DecisionTree::constant(0, tr.feature_names()),
            score: 0.0,
            accuracy: 0.0,
            provenance: Provenance::External,
        };
        assert!(rs.push_member(weak).is_err());
        assert_eq!(rs.threshold(), t);
    }

    #[test]
    fn shared_threshold_uses_global_best() {
        let (tr, te) = data();
        let a = small_cfg(0.1, Strategy::None, Baseline::GridBest);
        let b = small_cfg(
            0.1,
            Strategy::Bootstrap { sample_size: 100 },
            Baseline::GridBest,
        );
        let sets = build_shared(&tr, &te, &[(&a, None), (&b, None)]).unwrap();
        let own_a = build(&tr, &te, &a, None).unwrap();
        let own_b = build(&tr, &te, &b, None).unwrap();
        let best = own_a.baseline().score.max(own_b.baseline().score);
        for s in &sets {
            assert_eq!(s.baseline().score, best);
            assert_eq!(s.threshold_source(), ThresholdSource::Shared);
        }
    }

    #[test]
    fn identical_members_give_identical_rows() {
        let (tr, te) = data();
        let cfg = small_cfg(1.0, Strategy::None, Baseline::GridBest);
        let mut rs = build(&tr, &te, &cfg, None).unwrap();
        let first = rs.members()[0].clone();
        rs.push_member(first).unwrap();
        let m = predictions_matrix(&rs, &te).unwrap();
        assert_eq!(m.member_row(0), m.member_row(rs.len() - 1));
        let constant = Member {
            tree: DecisionTree::constant(0, tr.feature_names()),
            score: 1.0,
            accuracy: 1.0,
            provenance: Provenance::External,
        };
        rs.push_member(constant).unwrap();
        let m = predictions_matrix(&rs, &te).unwrap();
        assert!(m.member_row(rs.len() - 1).iter().all(|&p| p == 0));
        let votes = m.positive_votes();
        for (r, &v) in votes.iter().enumerate() {
            assert_eq!(
                v as usize,
                (0..m.n_members()).filter(|&k| m.get(k, r) == 1).count()
            );
        }
    }

    #[test]
    fn small_pool_is_warned_about() {
        let (tr, te) = data();
        let (pool, _) = generate_synthetic(&SyntheticSpec::default_mixture(500, 3)).unwrap();
        let cfg = small_cfg(
            1.0,
            Strategy::FreshResample { sample_size: 100 },
            Baseline::GridBest,
        );
        let rs = build(&tr, &te, &cfg, Some(&pool)).unwrap();
        assert!(rs.warnings().iter().any(|w| w.contains("draws overlap")));
        let (big, _) = generate_synthetic(&SyntheticSpec::default_mixture(2401, 3)).unwrap();
        let rs = build(&tr, &te, &cfg, Some(&big)).unwrap();
        assert!(rs.warnings().is_empty());
    }

    #[test]
    fn rejects_bad_config() {
        let (tr, te) = data();
        let mut cfg = small_cfg(1.5, Strategy::None, Baseline::GridBest);
        assert!(matches!(
            build(&tr, &te, &cfg, None),
            Err(RashomonError::Config(_))
        ));
        cfg.epsilon = 0.1;
        cfg.baseline = Baseline::CrossValidation { folds: 1 };
        assert!(build(&tr, &te, &cfg, None).is_err());
        cfg.baseline = Baseline::GridBest;
        cfg.n_models = 1000;
        assert!(matches!(
            build(&tr, &te, &cfg, None),
            Err(RashomonError::Tree(TreeError::GridTooSmall { .. }))
        ));
    }
}
