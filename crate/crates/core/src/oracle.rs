//! Ground truth for the approximations: exhaustive enumeration of small
//! decision trees over binary features, an uncached recomputation of the
//! conflict profile, and the synthetic benchmark's known conflicts.

use std::collections::HashMap;
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::data::{DataError, Dataset};
use crate::metrics::{ConflictProfile, MetricsError};
use crate::rashomon::{
    Member, Provenance, RashomonError, RashomonSet, Score, SetKind, ThresholdSource,
};
use crate::tree::{Criterion, DecisionTree, Node, SplitTest, TreeError, TreeParams};

pub const MAX_ENUM_DEPTH: usize = 3;
pub const DEFAULT_CAP: u64 = 5_000_000;

#[derive(Debug, Error)]
pub enum OracleError {
    #[error("feature {0} is not binary")]
    NonBinary(String),
    #[error("enumeration would produce {count} trees, above the cap of {cap}")]
    CapExceeded { count: u128, cap: u64 },
    #[error("invalid enumeration spec: {0}")]
    Spec(String),
    #[error(transparent)]
    Data(#[from] DataError),
    #[error(transparent)]
    Rashomon(#[from] RashomonError),
    #[error(transparent)]
    Tree(#[from] TreeError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnumSpec {
    pub max_depth: usize,
    pub lambda: f64,
    pub epsilon: f64,
    /// Skip splits whose two subtrees are identical and splits on a
    /// feature already tested on the path; both only re-express a smaller
    /// tree.
    #[serde(default = "default_dedup")]
    pub dedup: bool,
    #[serde(default = "default_cap")]
    pub cap: u64,
}

fn default_dedup() -> bool {
    true
}

fn default_cap() -> u64 {
    DEFAULT_CAP
}

impl EnumSpec {
    pub fn new(max_depth: usize, lambda: f64, epsilon: f64) -> Self {
        EnumSpec {
            max_depth,
            lambda,
            epsilon,
            dedup: true,
            cap: DEFAULT_CAP,
        }
    }
}

/// Number of trees the enumerator produces for `d` binary features.
pub fn candidate_count(d: usize, max_depth: usize, dedup: bool) -> u128 {
    fn go(d: usize, depth: usize, dedup: bool) -> u128 {
        if depth == 0 {
            return 2;
        }
        if dedup {
            if d == 0 {
                return 2;
            }
            let sub = go(d - 1, depth - 1, dedup);
            2u128.saturating_add(
                (d as u128).saturating_mul(sub.saturating_mul(sub.saturating_sub(1))),
            )
        } else {
            let sub = go(d, depth - 1, dedup);
            2u128.saturating_add((d as u128).saturating_mul(sub.saturating_mul(sub)))
        }
    }
    go(d, max_depth, dedup)
}

#[derive(Debug, PartialEq, Eq)]
enum EnumTree {
    Leaf(u8),
    Split {
        feature: usize,
        /// Taken when the feature is 0.
        low: Arc<EnumTree>,
        high: Arc<EnumTree>,
    },
}

impl EnumTree {
    fn leaves(&self) -> usize {
        match self {
            EnumTree::Leaf(_) => 1,
            EnumTree::Split { low, high, .. } => low.leaves() + high.leaves(),
        }
    }

    fn depth(&self) -> usize {
        match self {
            EnumTree::Leaf(_) => 0,
            EnumTree::Split { low, high, .. } => 1 + low.depth().max(high.depth()),
        }
    }
}

/// Row bitsets over the scoring data.
struct Bits {
    words: usize,
    features: Vec<Vec<u64>>,
    positive: Vec<u64>,
    all: Vec<u64>,
}

impl Bits {
    fn new(ds: &Dataset, labels: &[u8]) -> Self {
        let n = ds.n_rows();
        let words = n.div_ceil(64);
        let set = |pred: &dyn Fn(usize) -> bool| {
            let mut b = vec![0u64; words];
            for i in (0..n).filter(|&i| pred(i)) {
                b[i / 64] |= 1 << (i % 64);
            }
            b
        };
        Bits {
            words,
            features: (0..ds.n_features())
                .map(|j| set(&|i| ds.value(i, j) == 1.0))
                .collect(),
            positive: set(&|i| labels[i] == 1),
            all: set(&|_| true),
        }
    }

    fn correct(&self, t: &EnumTree, mask: &[u64]) -> u32 {
        match t {
            EnumTree::Leaf(1) => mask
                .iter()
                .zip(&self.positive)
                .map(|(m, p)| (m & p).count_ones())
                .sum(),
            EnumTree::Leaf(_) => mask
                .iter()
                .zip(&self.positive)
                .map(|(m, p)| (m & !p).count_ones())
                .sum(),
            EnumTree::Split { feature, low, high } => {
                let f = &self.features[*feature];
                let lo: Vec<u64> = mask.iter().zip(f).map(|(m, b)| m & !b).collect();
                let hi: Vec<u64> = mask.iter().zip(f).map(|(m, b)| m & b).collect();
                self.correct(low, &lo) + self.correct(high, &hi)
            }
        }
    }
}

/// Memoised lists of structurally distinct subtrees keyed on
/// (depth, allowed feature mask).
struct Enumerator {
    dedup: bool,
    all_features: u64,
    memo: HashMap<(usize, u64), Arc<Vec<Arc<EnumTree>>>>,
}

impl Enumerator {
    fn trees(&mut self, depth: usize, allowed: u64) -> Arc<Vec<Arc<EnumTree>>> {
        if let Some(v) = self.memo.get(&(depth, allowed)) {
            return v.clone();
        }
        let mut out = vec![Arc::new(EnumTree::Leaf(0)), Arc::new(EnumTree::Leaf(1))];
        if depth > 0 {
            for f in features_of(allowed) {
                let sub_allowed = if self.dedup {
                    allowed & !(1 << f)
                } else {
                    self.all_features
                };
                let sub = self.trees(depth - 1, sub_allowed);
                for (a, low) in sub.iter().enumerate() {
                    for (b, high) in sub.iter().enumerate() {
                        if self.dedup && a == b {
                            continue;
                        }
                        out.push(Arc::new(EnumTree::Split {
                            feature: f,
                            low: low.clone(),
                            high: high.clone(),
                        }));
                    }
                }
            }
        }
        let out = Arc::new(out);
        self.memo.insert((depth, allowed), out.clone());
        out
    }
}

fn features_of(mask: u64) -> impl Iterator<Item = usize> {
    (0..64).filter(move |f| mask & (1 << f) != 0)
}

/// One enumerated tree: canonical index, correct count, leaves.
#[derive(Clone, Copy)]
struct Scored {
    index: usize,
    correct: u32,
    leaves: usize,
}

fn check_binary(ds: &Dataset) -> Result<(), OracleError> {
    for (j, c) in ds.columns().iter().enumerate() {
        if ds.rows().any(|r| r[j] != 0.0 && r[j] != 1.0) {
            return Err(OracleError::NonBinary(c.name.clone()));
        }
    }
    Ok(())
}

/// The exact Rashomon set of all trees of depth <= `spec.max_depth` over
/// the binary features, under Obj(g) = acc(g) - lambda * H(g) on `test`.
///
/// g0 is the first tree in canonical order with maximal Obj. Candidates are
/// ordered: constants, then splits by root feature and subtree order.
pub fn enumerate_rashomon(
    train: &Dataset,
    test: &Dataset,
    spec: &EnumSpec,
) -> Result<RashomonSet, OracleError> {
    if spec.max_depth > MAX_ENUM_DEPTH {
        return Err(OracleError::Spec(format!(
            "max_depth {} above {MAX_ENUM_DEPTH}",
            spec.max_depth
        )));
    }
    if spec.lambda.is_nan() || spec.lambda < 0.0 || !(0.0..=1.0).contains(&spec.epsilon) {
        return Err(OracleError::Spec(format!(
            "lambda {} / epsilon {}",
            spec.lambda, spec.epsilon
        )));
    }
    test.check_same_features(train.columns())?;
    check_binary(train)?;
    check_binary(test)?;
    let d = test.n_features();
    if d > 64 {
        return Err(OracleError::Spec(format!(
            "{d} features, at most 64 supported"
        )));
    }
    let count = candidate_count(d, spec.max_depth, spec.dedup);
    if count > u128::from(spec.cap) {
        return Err(OracleError::CapExceeded {
            count,
            cap: spec.cap,
        });
    }
    if test.is_empty() {
        return Err(TreeError::EmptyDataset.into());
    }
    let labels = test.require_labels()?;
    let bits = Bits::new(test, labels);
    let all_features = if d == 64 { u64::MAX } else { (1u64 << d) - 1 };
    let mut en = Enumerator {
        dedup: spec.dedup,
        all_features,
        memo: HashMap::new(),
    };

    // Candidates are the two constants plus, per root feature, every pair
    // of subtrees. Subtree scores under each side's mask are computed once
    // so each root pair costs O(1).
    let mut roots: Vec<(usize, Arc<Vec<Arc<EnumTree>>>)> = Vec::new();
    if spec.max_depth > 0 {
        for f in 0..d {
            let sub_allowed = if spec.dedup {
                all_features & !(1 << f)
            } else {
                all_features
            };
            roots.push((f, en.trees(spec.max_depth - 1, sub_allowed)));
        }
    }
    let constants = [EnumTree::Leaf(0), EnumTree::Leaf(1)];
    let mut offset = constants.len();
    struct RootBlock {
        feature: usize,
        offset: usize,
        subtrees: Arc<Vec<Arc<EnumTree>>>,
        low: Vec<u32>,
        high: Vec<u32>,
        leaves: Vec<usize>,
    }
    let blocks: Vec<RootBlock> = roots
        .into_iter()
        .map(|(feature, subtrees)| {
            let f = &bits.features[feature];
            let lo_mask: Vec<u64> = bits.all.iter().zip(f).map(|(m, b)| m & !b).collect();
            let hi_mask: Vec<u64> = bits.all.iter().zip(f).map(|(m, b)| m & b).collect();
            let low = subtrees
                .par_iter()
                .map(|t| bits.correct(t, &lo_mask))
                .collect();
            let high = subtrees
                .par_iter()
                .map(|t| bits.correct(t, &hi_mask))
                .collect();
            let leaves = subtrees.iter().map(|t| t.leaves()).collect();
            let k = subtrees.len();
            let block = RootBlock {
                feature,
                offset,
                subtrees,
                low,
                high,
                leaves,
            };
            offset += if spec.dedup { k * (k - 1) } else { k * k };
            block
        })
        .collect();
    debug_assert_eq!(offset as u128, count);
    debug_assert_eq!(bits.words, test.n_rows().div_ceil(64));

    let n = test.n_rows() as f64;
    let score = Score::Penalized {
        lambda: spec.lambda,
    };
    let objective = |s: &Scored| score.from_accuracy(f64::from(s.correct) / n, s.leaves);
    let block_scores = |b: &RootBlock| -> Vec<Scored> {
        let k = b.subtrees.len();
        let mut out = Vec::with_capacity(k * k);
        let mut index = b.offset;
        for lo in 0..k {
            for hi in 0..k {
                if spec.dedup && lo == hi {
                    continue;
                }
                out.push(Scored {
                    index,
                    correct: b.low[lo] + b.high[hi],
                    leaves: b.leaves[lo] + b.leaves[hi],
                });
                index += 1;
            }
        }
        out
    };

    let mut scored: Vec<Scored> = constants
        .iter()
        .enumerate()
        .map(|(index, t)| Scored {
            index,
            correct: bits.correct(t, &bits.all),
            leaves: 1,
        })
        .collect();
    let per_block: Vec<Vec<Scored>> = blocks.par_iter().map(block_scores).collect();
    scored.extend(per_block.into_iter().flatten());

    let best = scored
        .iter()
        .copied()
        .reduce(|a, b| if objective(&b) > objective(&a) { b } else { a })
        .expect("constants are always enumerated");
    let threshold = objective(&best) - spec.epsilon;
    let tree_at = |index: usize| -> Arc<EnumTree> {
        if index < constants.len() {
            return Arc::new(if index == 0 {
                EnumTree::Leaf(0)
            } else {
                EnumTree::Leaf(1)
            });
        }
        let b = blocks
            .iter()
            .rev()
            .find(|b| b.offset <= index)
            .expect("index within an enumerated block");
        let k = b.subtrees.len();
        let local = index - b.offset;
        let (lo, hi) = if spec.dedup {
            let lo = local / (k - 1);
            let r = local % (k - 1);
            (lo, if r >= lo { r + 1 } else { r })
        } else {
            (local / k, local % k)
        };
        Arc::new(EnumTree::Split {
            feature: b.feature,
            low: b.subtrees[lo].clone(),
            high: b.subtrees[hi].clone(),
        })
    };
    let names = test.feature_names();
    let to_member = |s: &Scored| -> Result<Member, OracleError> {
        let tree = to_decision_tree(&tree_at(s.index), &names)?;
        debug_assert_eq!(tree.leaf_count(), s.leaves);
        Ok(Member {
            tree,
            score: objective(s),
            accuracy: f64::from(s.correct) / n,
            provenance: Provenance::Enumerated { index: s.index },
        })
    };
    let baseline = to_member(&best)?;
    let members = scored
        .par_iter()
        .filter(|s| objective(s) >= threshold - crate::rashomon::SCORE_TOLERANCE)
        .map(to_member)
        .collect::<Result<Vec<_>, _>>()?;
    let mut rs = RashomonSet::assemble(
        SetKind::Exhaustive,
        baseline,
        members,
        spec.epsilon,
        score,
        ThresholdSource::Own,
        test.columns().to_vec(),
        format!("{spec:?}"),
    )?;
    rs.candidate_count = scored.len();
    Ok(rs)
}

fn to_decision_tree(t: &EnumTree, names: &[String]) -> Result<DecisionTree, TreeError> {
    fn push(t: &EnumTree, nodes: &mut Vec<Node>) -> usize {
        let id = nodes.len();
        match t {
            EnumTree::Leaf(label) => {
                nodes.push(Node::Leaf {
                    label: *label,
                    n0: 0,
                    n1: 0,
                });
            }
            EnumTree::Split { feature, low, high } => {
                nodes.push(Node::Leaf {
                    label: 0,
                    n0: 0,
                    n1: 0,
                });
                let left = push(low, nodes);
                let right = push(high, nodes);
                nodes[id] = Node::Split {
                    feature: *feature,
                    test: SplitTest::Threshold(0.5),
                    left,
                    right,
                };
            }
        }
        id
    }
    let mut nodes = Vec::new();
    push(t, &mut nodes);
    DecisionTree::from_parts(
        nodes,
        TreeParams::new(t.depth().max(1), Criterion::Gini, 0),
        names.to_vec(),
        (0..names.len()).collect(),
    )
}

/// Recomputes the conflict profile with plain per-member, per-row
/// prediction loops; independent of the prediction matrix path.
pub fn brute_force_metrics(
    rs: &RashomonSet,
    ds: &Dataset,
) -> Result<ConflictProfile, MetricsError> {
    ds.check_same_features(rs.features())
        .map_err(RashomonError::from)?;
    let mut n1 = vec![0u32; ds.n_rows()];
    for member in rs.members() {
        for (i, slot) in n1.iter_mut().enumerate() {
            let p = member
                .tree
                .predict(ds.row(i))
                .map_err(RashomonError::from)?;
            if p == 1 {
                *slot += 1;
            }
        }
    }
    Ok(ConflictProfile::from_votes(
        ds.fingerprint(),
        ds.row_ids(),
        &n1,
        rs.len(),
    ))
}

/// Known conflicts of synthetic rows: 0.5 in the overlap, 0 elsewhere.
pub fn synthetic_ground_truth(ds: &Dataset) -> Result<ConflictProfile, MetricsError> {
    let tags = ds.tags().ok_or(MetricsError::MissingTags)?;
    let conflicts: Vec<f64> = (0..ds.n_rows())
        .map(|i| if tags.is_overlap(i) { 0.5 } else { 0.0 })
        .collect();
    Ok(ConflictProfile::from_conflicts(
        ds.fingerprint(),
        ds.row_ids(),
        &conflicts,
    ))
}
