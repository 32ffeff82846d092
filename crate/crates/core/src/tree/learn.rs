use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::seeds;

use super::{Criterion, DecisionTree, Node, SplitTest, TreeError, TreeParams};
use crate::data::{ColumnKind, Dataset};
use crate::multiplicity::TrainingView;

/// Costs within this relative distance count as a tie.
const TIE_TOLERANCE: f64 = 1e-12;

/// Trains a tree that may split on every feature of `ds`.
pub fn train(ds: &Dataset, params: &TreeParams) -> Result<DecisionTree, TreeError> {
    let all: Vec<usize> = (0..ds.n_features()).collect();
    train_with_features(ds, &all, params)
}

pub fn train_view(view: &TrainingView<'_>, params: &TreeParams) -> Result<DecisionTree, TreeError> {
    train_with_features(&view.data, &view.eligible, params)
}

/// Greedy CART growth restricted to the `eligible` features.
///
/// Splits minimise the size-weighted child impurity; equally good splits
/// are chosen uniformly under `params.seed`, with the draw keyed on the
/// node's position so a shallower tree is a prefix of a deeper one grown
/// with the same seed. Growth stops at `max_depth`,
/// at pure nodes, below `min_samples_split` rows, or when no feature
/// separates the node. Leaves predict the majority label, ties to 0.
pub fn train_with_features(
    ds: &Dataset,
    eligible: &[usize],
    params: &TreeParams,
) -> Result<DecisionTree, TreeError> {
    params.validate()?;
    if ds.is_empty() {
        return Err(TreeError::EmptyDataset);
    }
    let labels = ds.require_labels()?;
    let mut eligible = eligible.to_vec();
    eligible.sort_unstable();
    eligible.dedup();
    if let Some(&j) = eligible.iter().find(|&&j| j >= ds.n_features()) {
        return Err(TreeError::InvalidParams(format!(
            "feature {j} out of range"
        )));
    }
    let mut b = Builder {
        ds,
        labels,
        eligible: &eligible,
        params,
        nodes: Vec::new(),
        n_total: ds.n_rows() as f64,
    };
    let idx: Vec<usize> = (0..ds.n_rows()).collect();
    b.grow(idx, 0, 1);
    let nodes = b.nodes;
    DecisionTree::from_parts(nodes, params.clone(), ds.feature_names(), eligible)
}

struct Builder<'a> {
    ds: &'a Dataset,
    labels: &'a [u8],
    eligible: &'a [usize],
    params: &'a TreeParams,
    nodes: Vec<Node>,
    n_total: f64,
}

#[derive(Debug, Clone, Copy)]
struct Candidate {
    feature: usize,
    test: SplitTest,
    cost: f64,
}

impl Builder<'_> {
    fn counts(&self, idx: &[usize]) -> (u32, u32) {
        let n1 = idx.iter().filter(|&&i| self.labels[i] == 1).count() as u32;
        (idx.len() as u32 - n1, n1)
    }

    /// `slot` is the heap index of the node (root 1, children 2k and 2k+1).
    fn grow(&mut self, idx: Vec<usize>, depth: usize, slot: u64) -> usize {
        let id = self.nodes.len();
        let (n0, n1) = self.counts(&idx);
        let leaf = Node::Leaf {
            label: u8::from(n1 > n0),
            n0,
            n1,
        };
        self.nodes.push(leaf.clone());
        if depth >= self.params.max_depth
            || n0 == 0
            || n1 == 0
            || idx.len() < self.params.min_samples_split.max(2)
        {
            return id;
        }
        let Some(best) = self.best_split(&idx, slot) else {
            return id;
        };
        let (left, right): (Vec<usize>, Vec<usize>) = idx
            .iter()
            .partition(|&&i| best.test.goes_left(self.ds.value(i, best.feature)));
        if self.params.leaf_penalty_lambda > 0.0 {
            let correct = |side: &[usize]| {
                let (a, b) = self.counts(side);
                a.max(b) as f64
            };
            let gain = (correct(&left) + correct(&right) - n0.max(n1) as f64) / self.n_total;
            if gain < self.params.leaf_penalty_lambda {
                return id;
            }
        }
        let l = self.grow(left, depth + 1, slot.wrapping_mul(2));
        let r = self.grow(right, depth + 1, slot.wrapping_mul(2).wrapping_add(1));
        self.nodes[id] = Node::Split {
            feature: best.feature,
            test: best.test,
            left: l,
            right: r,
        };
        id
    }

    fn best_split(&self, idx: &[usize], slot: u64) -> Option<Candidate> {
        let crit = self.params.criterion;
        let tol = TIE_TOLERANCE * idx.len() as f64;
        let mut ties: Vec<Candidate> = Vec::new();
        let mut best = f64::INFINITY;
        let mut offer = |c: Candidate| {
            if c.cost < best - tol {
                best = c.cost;
                ties.clear();
                ties.push(c);
            } else if c.cost <= best + tol {
                ties.push(c);
            }
        };
        let (n0, n1) = self.counts(idx);
        let (t0, t1) = (f64::from(n0), f64::from(n1));
        for &j in self.eligible {
            match self.ds.columns()[j].kind {
                ColumnKind::Categorical => {
                    let k = self.ds.columns()[j].categories.len();
                    let mut per = vec![(0u32, 0u32); k];
                    for &i in idx {
                        let c = self.ds.value(i, j) as usize;
                        if self.labels[i] == 1 {
                            per[c].1 += 1;
                        } else {
                            per[c].0 += 1;
                        }
                    }
                    for (c, &(a, b)) in per.iter().enumerate() {
                        let m = a + b;
                        if m == 0 || m as usize == idx.len() {
                            continue;
                        }
                        let (a, b) = (f64::from(a), f64::from(b));
                        offer(Candidate {
                            feature: j,
                            test: SplitTest::Category(c as u32),
                            cost: split_cost(crit, a, b, t0 - a, t1 - b),
                        });
                    }
                }
                _ => {
                    let mut col: Vec<(f64, u8)> = idx
                        .iter()
                        .map(|&i| (self.ds.value(i, j), self.labels[i]))
                        .collect();
                    col.sort_by(|a, b| a.0.total_cmp(&b.0));
                    let (mut a, mut b) = (0.0, 0.0);
                    for w in 0..col.len() - 1 {
                        if col[w].1 == 1 {
                            b += 1.0;
                        } else {
                            a += 1.0;
                        }
                        let (lo, hi) = (col[w].0, col[w + 1].0);
                        if lo == hi {
                            continue;
                        }
                        let mut thr = lo + (hi - lo) / 2.0;
                        if thr >= hi {
                            thr = lo;
                        }
                        offer(Candidate {
                            feature: j,
                            test: SplitTest::Threshold(thr),
                            cost: split_cost(crit, a, b, t0 - a, t1 - b),
                        });
                    }
                }
            }
        }
        match ties.len() {
            0 => None,
            1 => Some(ties[0]),
            n => {
                let mut rng = ChaCha8Rng::seed_from_u64(seeds::mix(self.params.seed, slot));
                Some(ties[rng.random_range(0..n)])
            }
        }
    }
}

fn split_cost(crit: Criterion, l0: f64, l1: f64, r0: f64, r1: f64) -> f64 {
    crit.weighted_impurity(l0, l1) + crit.weighted_impurity(r0, r1)
}
