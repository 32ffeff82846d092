//! Binary CART decision trees.

mod grid;
mod learn;

pub use grid::{sample_grid, ParamGrid};
pub use learn::{train, train_view, train_with_features};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::data::{DataError, Dataset};

#[derive(Debug, Error)]
pub enum TreeError {
    #[error("cannot train on an empty dataset")]
    EmptyDataset,
    #[error("invalid tree parameters: {0}")]
    InvalidParams(String),
    #[error("row has {found} values, tree expects {expected}")]
    WidthMismatch { expected: usize, found: usize },
    #[error("missing value for feature {0}")]
    MissingFeature(String),
    #[error("malformed tree: {0}")]
    Malformed(String),
    #[error("grid has {size} cells, cannot draw {requested} without replacement")]
    GridTooSmall { size: usize, requested: usize },
    #[error(transparent)]
    Data(#[from] DataError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Criterion {
    Gini,
    Entropy,
}

impl Criterion {
    /// Node impurity scaled by node size, from class counts.
    pub fn weighted_impurity(self, n0: f64, n1: f64) -> f64 {
        let n = n0 + n1;
        if n == 0.0 {
            return 0.0;
        }
        match self {
            Criterion::Gini => n - (n0 * n0 + n1 * n1) / n,
            Criterion::Entropy => {
                let term = |k: f64| if k > 0.0 { -k * (k / n).ln() } else { 0.0 };
                term(n0) + term(n1)
            }
        }
    }
}

fn default_min_samples_split() -> usize {
    2
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TreeParams {
    pub max_depth: usize,
    pub criterion: Criterion,
    pub seed: u64,
    #[serde(default = "default_min_samples_split")]
    pub min_samples_split: usize,
    /// When positive, a split is kept only if it raises training accuracy
    /// by at least this much (as a fraction of all training rows).
    #[serde(default)]
    pub leaf_penalty_lambda: f64,
}

impl TreeParams {
    pub fn new(max_depth: usize, criterion: Criterion, seed: u64) -> Self {
        TreeParams {
            max_depth,
            criterion,
            seed,
            min_samples_split: 2,
            leaf_penalty_lambda: 0.0,
        }
    }

    pub fn validate(&self) -> Result<(), TreeError> {
        if self.max_depth == 0 {
            return Err(TreeError::InvalidParams("max_depth must be >= 1".into()));
        }
        if !(self.leaf_penalty_lambda >= 0.0 && self.leaf_penalty_lambda.is_finite()) {
            return Err(TreeError::InvalidParams(format!(
                "leaf_penalty_lambda {}",
                self.leaf_penalty_lambda
            )));
        }
        Ok(())
    }
}

/// Test applied at an internal node; `true` routes left.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SplitTest {
    /// `value <= threshold`
    Threshold(f64),
    /// `value == category code`
    Category(u32),
}

impl SplitTest {
    #[inline]
    pub fn goes_left(self, value: f64) -> bool {
        match self {
            SplitTest::Threshold(t) => value <= t,
            SplitTest::Category(c) => value == f64::from(c),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Node {
    Leaf {
        label: u8,
        /// Training rows of each class that reached this leaf.
        n0: u32,
        n1: u32,
    },
    Split {
        feature: usize,
        test: SplitTest,
        left: usize,
        right: usize,
    },
}

/// A trained binary classifier. Node 0 is the root.
#[derive(Debug, Clone, PartialEq)]
pub struct DecisionTree {
    nodes: Vec<Node>,
    params: TreeParams,
    feature_names: Vec<String>,
    eligible: Vec<usize>,
}

impl DecisionTree {
    /// Assembles a tree from parts, checking structure.
    pub fn from_parts(
        nodes: Vec<Node>,
        params: TreeParams,
        feature_names: Vec<String>,
        eligible: Vec<usize>,
    ) -> Result<Self, TreeError> {
        let tree = DecisionTree {
            nodes,
            params,
            feature_names,
            eligible,
        };
        tree.check()?;
        Ok(tree)
    }

    /// A single-leaf tree.
    pub fn constant(label: u8, feature_names: Vec<String>) -> Self {
        let d = feature_names.len();
        DecisionTree {
            nodes: vec![Node::Leaf {
                label,
                n0: 0,
                n1: 0,
            }],
            params: TreeParams::new(1, Criterion::Gini, 0),
            feature_names,
            eligible: (0..d).collect(),
        }
    }

    fn check(&self) -> Result<(), TreeError> {
        let bad = |m: String| Err(TreeError::Malformed(m));
        if self.nodes.is_empty() {
            return bad("no nodes".into());
        }
        let mut seen = vec![false; self.nodes.len()];
        let mut stack = vec![(0usize, 0usize)];
        while let Some((id, depth)) = stack.pop() {
            if seen[id] {
                return bad(format!("node {id} reached twice"));
            }
            seen[id] = true;
            match &self.nodes[id] {
                Node::Leaf { label, .. } => {
                    if *label > 1 {
                        return bad(format!("leaf {id} label {label}"));
                    }
                }
                Node::Split {
                    feature,
                    left,
                    right,
                    ..
                } => {
                    if !self.eligible.contains(feature) || *feature >= self.feature_names.len() {
                        return bad(format!("node {id} splits on ineligible feature {feature}"));
                    }
                    if *left >= self.nodes.len() || *right >= self.nodes.len() {
                        return bad(format!("node {id} has dangling child"));
                    }
                    stack.push((*left, depth + 1));
                    stack.push((*right, depth + 1));
                }
            }
        }
        if seen.iter().any(|s| !s) {
            return bad("unreachable nodes".into());
        }
        Ok(())
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn params(&self) -> &TreeParams {
        &self.params
    }

    pub fn feature_names(&self) -> &[String] {
        &self.feature_names
    }

    /// Features the splits were allowed to use.
    pub fn eligible_features(&self) -> &[usize] {
        &self.eligible
    }

    /// H(g): number of leaves.
    pub fn leaf_count(&self) -> usize {
        self.nodes
            .iter()
            .filter(|n| matches!(n, Node::Leaf { .. }))
            .count()
    }

    /// Longest root-to-leaf path, in edges.
    pub fn depth(&self) -> usize {
        fn go(nodes: &[Node], id: usize) -> usize {
            match nodes[id] {
                Node::Leaf { .. } => 0,
                Node::Split { left, right, .. } => 1 + go(nodes, left).max(go(nodes, right)),
            }
        }
        go(&self.nodes, 0)
    }

    /// Routes `x` to a leaf. `x` must be a full-width row.
    pub fn predict(&self, x: &[f64]) -> Result<u8, TreeError> {
        if x.len() != self.feature_names.len() {
            return Err(TreeError::WidthMismatch {
                expected: self.feature_names.len(),
                found: x.len(),
            });
        }
        let mut id = 0;
        loop {
            match self.nodes[id] {
                Node::Leaf { label, .. } => return Ok(label),
                Node::Split {
                    feature,
                    test,
                    left,
                    right,
                } => {
                    let v = x[feature];
                    if v.is_nan() {
                        return Err(TreeError::MissingFeature(
                            self.feature_names[feature].clone(),
                        ));
                    }
                    id = if test.goes_left(v) { left } else { right };
                }
            }
        }
    }

    /// Predictions for every row of `ds`, after checking its features match.
    pub fn predict_all(&self, ds: &Dataset) -> Result<Vec<u8>, TreeError> {
        self.check_features(ds)?;
        ds.rows().map(|r| self.predict(r)).collect()
    }

    pub fn check_features(&self, ds: &Dataset) -> Result<(), TreeError> {
        let names = ds.feature_names();
        if names != self.feature_names {
            return Err(DataError::FeatureMismatch(format!(
                "tree trained on {:?}, data has {:?}",
                self.feature_names, names
            ))
            .into());
        }
        Ok(())
    }

    /// acc(g): fraction of rows of `ds` predicted correctly.
    pub fn accuracy(&self, ds: &Dataset) -> Result<f64, TreeError> {
        Ok(self.correct_count(ds)? as f64 / ds.n_rows() as f64)
    }

    /// Number of rows of `ds` predicted correctly.
    pub fn correct_count(&self, ds: &Dataset) -> Result<usize, TreeError> {
        if ds.is_empty() {
            return Err(TreeError::EmptyDataset);
        }
        let labels = ds.require_labels()?;
        let preds = self.predict_all(ds)?;
        Ok(preds.iter().zip(labels).filter(|(p, y)| p == y).count())
    }

    /// Obj(g) = acc(g) - lambda * H(g).
    pub fn objective(&self, ds: &Dataset, lambda: f64) -> Result<f64, TreeError> {
        if lambda.is_nan() || lambda < 0.0 {
            return Err(TreeError::InvalidParams(format!("lambda {lambda}")));
        }
        Ok(penalized(self.accuracy(ds)?, self.leaf_count(), lambda))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&TreeDoc::from(self)).expect("tree serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, TreeError> {
        let doc: TreeDoc =
            serde_json::from_str(text).map_err(|e| TreeError::Malformed(e.to_string()))?;
        doc.into_tree()
    }
}

/// acc - lambda * leaves
pub fn penalized(accuracy: f64, leaves: usize, lambda: f64) -> f64 {
    accuracy - lambda * leaves as f64
}

const TREE_FORMAT: &str = "multiplicity-tree";
const TREE_VERSION: u32 = 1;

/// Persisted form: a flat node list where each node names its parent.
#[derive(Debug, Serialize, Deserialize)]
struct TreeDoc {
    format: String,
    version: u32,
    params: TreeParams,
    feature_names: Vec<String>,
    eligible: Vec<usize>,
    nodes: Vec<NodeDoc>,
}

#[derive(Debug, Serialize, Deserialize)]
struct NodeDoc {
    id: usize,
    parent: Option<usize>,
    #[serde(flatten)]
    body: NodeBody,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
enum NodeBody {
    Leaf {
        label: u8,
        n0: u32,
        n1: u32,
    },
    Split {
        feature: usize,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        threshold: Option<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        category: Option<u32>,
        left: usize,
        right: usize,
    },
}

impl From<&DecisionTree> for TreeDoc {
    fn from(t: &DecisionTree) -> Self {
        let mut parent = vec![None; t.nodes.len()];
        for (id, n) in t.nodes.iter().enumerate() {
            if let Node::Split { left, right, .. } = n {
                parent[*left] = Some(id);
                parent[*right] = Some(id);
            }
        }
        let nodes = t
            .nodes
            .iter()
            .enumerate()
            .map(|(id, n)| NodeDoc {
                id,
                parent: parent[id],
                body: match *n {
                    Node::Leaf { label, n0, n1 } => NodeBody::Leaf { label, n0, n1 },
                    Node::Split {
                        feature,
                        test,
                        left,
                        right,
                    } => NodeBody::Split {
                        feature,
                        threshold: match test {
                            SplitTest::Threshold(x) => Some(x),
                            SplitTest::Category(_) => None,
                        },
                        category: match test {
                            SplitTest::Category(c) => Some(c),
                            SplitTest::Threshold(_) => None,
                        },
                        left,
                        right,
                    },
                },
            })
            .collect();
        TreeDoc {
            format: TREE_FORMAT.into(),
            version: TREE_VERSION,
            params: t.params.clone(),
            feature_names: t.feature_names.clone(),
            eligible: t.eligible.clone(),
            nodes,
        }
    }
}

impl TreeDoc {
    fn into_tree(self) -> Result<DecisionTree, TreeError> {
        if self.format != TREE_FORMAT || self.version != TREE_VERSION {
            return Err(TreeError::Malformed(format!(
                "unsupported format {} v{}",
                self.format, self.version
            )));
        }
        let mut nodes = Vec::with_capacity(self.nodes.len());
        for (pos, nd) in self.nodes.into_iter().enumerate() {
            if nd.id != pos {
                return Err(TreeError::Malformed(format!(
                    "node {} at position {pos}",
                    nd.id
                )));
            }
            nodes.push(match nd.body {
                NodeBody::Leaf { label, n0, n1 } => Node::Leaf { label, n0, n1 },
                NodeBody::Split {
                    feature,
                    threshold,
                    category,
                    left,
                    right,
                } => {
                    let test = match (threshold, category) {
                        (Some(t), None) => SplitTest::Threshold(t),
                        (None, Some(c)) => SplitTest::Category(c),
                        _ => {
                            return Err(TreeError::Malformed(format!(
                                "node {pos} needs exactly one of threshold/category"
                            )))
                        }
                    };
                    Node::Split {
                        feature,
                        test,
                        left,
                        right,
                    }
                }
            });
        }
        DecisionTree::from_parts(nodes, self.params, self.feature_names, self.eligible)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::Column;

    fn stump() -> DecisionTree {
        DecisionTree::from_parts(
            vec![
                Node::Split {
                    feature: 0,
                    test: SplitTest::Threshold(1.5),
                    left: 1,
                    right: 2,
                },
                Node::Leaf {
                    label: 0,
                    n0: 2,
                    n1: 0,
                },
                Node::Leaf {
                    label: 1,
                    n0: 0,
                    n1: 2,
                },
            ],
            TreeParams::new(1, Criterion::Gini, 0),
            vec!["x".into()],
            vec![0],
        )
        .unwrap()
    }

    fn labelled(xs: &[f64], ys: &[u8]) -> Dataset {
        Dataset::new(
            vec![Column::numeric("x")],
            xs.to_vec(),
            Some(ys.to_vec()),
            None,
        )
        .unwrap()
    }

    #[test]
    fn constant_tree_predicts_its_label() {
        let t = DecisionTree::constant(0, vec!["x".into(), "y".into()]);
        assert_eq!(t.predict(&[3.0, -1.0]).unwrap(), 0);
        assert_eq!(t.leaf_count(), 1);
    }

    #[test]
    fn routes_right_above_threshold() {
        let t = stump();
        assert_eq!(t.predict(&[2.0]).unwrap(), 1);
        assert_eq!(t.predict(&[1.5]).unwrap(), 0);
    }

    #[test]
    fn missing_feature_is_an_error() {
        let t = stump();
        assert!(matches!(
            t.predict(&[f64::NAN]),
            Err(TreeError::MissingFeature(_))
        ));
        assert!(matches!(
            t.predict(&[]),
            Err(TreeError::WidthMismatch { .. })
        ));
    }

    #[test]
    fn accuracy_counts_matches() {
        // predictions [1,0,1,1] vs labels [1,0,0,0]
        let ds = labelled(&[2.0, 0.0, 3.0, 4.0], &[1, 0, 0, 0]);
        assert_eq!(stump().accuracy(&ds).unwrap(), 0.5);
        let perfect = labelled(&[0.0, 1.0, 2.0, 3.0], &[0, 0, 1, 1]);
        assert_eq!(stump().accuracy(&perfect).unwrap(), 1.0);
    }

    #[test]
    fn objective_penalises_leaves() {
        assert!((penalized(0.6536, 3, 0.01) - 0.6236).abs() < 1e-12);
        assert!((penalized(0.7, 5, 0.01) - 0.65).abs() < 1e-12);
        let ds = labelled(&[2.0, 0.0, 3.0, 4.0], &[1, 0, 0, 0]);
        let t = stump();
        assert_eq!(t.objective(&ds, 0.0).unwrap(), t.accuracy(&ds).unwrap());
    }

    #[test]
    fn json_round_trip() {
        let t = stump();
        let back = DecisionTree::from_json(&t.to_json()).unwrap();
        assert_eq!(back, t);
        assert!(t.to_json().contains("\"parent\": 0"));
    }

    #[test]
    fn rejects_cycles() {
        let r = DecisionTree::from_parts(
            vec![Node::Split {
                feature: 0,
                test: SplitTest::Threshold(0.0),
                left: 0,
                right: 0,
            }],
            TreeParams::new(1, Criterion::Gini, 0),
            vec!["x".into()],
            vec![0],
        );
        assert!(r.is_err());
    }
}
