//! Random shapelet forests: tree representation, majority-vote prediction
//! and decomposition of trees into labeled decision paths.
//!
//! Every internal node tests `d_s(shapelet, T) <= threshold`. Series that
//! pass take the `le` child, the rest take the `gt` child.

use std::cmp::Ordering;
use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::error::{contract, Result};
use crate::series::{any_within, Shapelet, TimeSeries};

mod train;

pub use train::train;

/// Which side of a split a path takes.
///
/// The numeric value is the sign used when placing a tweaked window:
/// `-1` pulls the window inside the threshold sphere, `+1` pushes it out.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Direction {
    /// `d_s <= threshold`
    Le,
    /// `d_s > threshold`
    Gt,
}

impl Direction {
    pub fn sign(self) -> f64 {
        match self {
            Direction::Le => -1.0,
            Direction::Gt => 1.0,
        }
    }

    pub fn as_i8(self) -> i8 {
        match self {
            Direction::Le => -1,
            Direction::Gt => 1,
        }
    }
}

/// One `<shapelet, threshold, direction>` test along a decision path.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathCondition {
    pub shapelet: Shapelet,
    pub threshold: f64,
    pub direction: Direction,
}

impl PathCondition {
    /// True iff `series` takes this condition's branch.
    ///
    /// Branch semantics, not the literal `(d_s - theta) * delta <= 0`: with
    /// `delta = -1` for the `<=` branch that product form would accept
    /// `d_s >= theta`, which contradicts the tree it was read off. The form
    /// used here is `(theta - d_s) * delta <= 0`.
    pub fn test(&self, series: &[f64]) -> Result<bool> {
        let within = any_within(&self.shapelet, series, self.threshold)?;
        Ok(match self.direction {
            Direction::Le => within,
            Direction::Gt => !within,
        })
    }
}

pub fn condition_test(series: &TimeSeries, condition: &PathCondition) -> Result<bool> {
    condition.test(series.values())
}

/// A root-to-leaf rule of one tree.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecisionPath {
    pub conditions: Vec<PathCondition>,
    pub label: String,
    pub tree_index: usize,
    pub path_index: usize,
}

impl DecisionPath {
    pub fn satisfied_by(&self, series: &[f64]) -> Result<bool> {
        for c in &self.conditions {
            if !c.test(series)? {
                return Ok(false);
            }
        }
        Ok(true)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Node {
    Split {
        shapelet: Shapelet,
        threshold: f64,
        le: usize,
        gt: usize,
    },
    Leaf {
        class: usize,
    },
}

/// A binary shapelet tree stored as a node arena rooted at index 0.
#[derive(Debug, Clone, PartialEq)]
pub struct ShapeletTree {
    nodes: Vec<Node>,
}

impl ShapeletTree {
    /// Build a tree from an arena, checking that it is a proper binary tree
    /// rooted at node 0 whose leaves reference one of `n_classes` classes.
    pub fn from_nodes(nodes: Vec<Node>, n_classes: usize) -> Result<Self> {
        if nodes.is_empty() {
            return Err(contract("tree has no nodes"));
        }
        let mut seen = vec![false; nodes.len()];
        let mut queue = VecDeque::from([0usize]);
        seen[0] = true;
        while let Some(i) = queue.pop_front() {
            match &nodes[i] {
                Node::Leaf { class } => {
                    if *class >= n_classes {
                        return Err(contract(format!("leaf {i} has class {class} of {n_classes}")));
                    }
                }
                Node::Split {
                    threshold, le, gt, ..
                } => {
                    if !threshold.is_finite() || *threshold < 0.0 {
                        return Err(contract(format!("node {i} has invalid threshold {threshold}")));
                    }
                    for &c in [le, gt] {
                        if c >= nodes.len() || seen[c] {
                            return Err(contract(format!("node {i} has invalid child {c}")));
                        }
                        seen[c] = true;
                        queue.push_back(c);
                    }
                }
            }
        }
        if let Some(orphan) = seen.iter().position(|s| !s) {
            return Err(contract(format!("node {orphan} is unreachable from the root")));
        }
        Ok(Self { nodes })
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn leaf_count(&self) -> usize {
        self.nodes
            .iter()
            .filter(|n| matches!(n, Node::Leaf { .. }))
            .count()
    }

    pub fn is_single_leaf(&self) -> bool {
        self.nodes.len() == 1
    }

    /// Leaf class reached by `series`.
    pub fn predict_class(&self, series: &[f64]) -> Result<usize> {
        let mut i = 0;
        loop {
            match &self.nodes[i] {
                Node::Leaf { class } => return Ok(*class),
                Node::Split {
                    shapelet,
                    threshold,
                    le,
                    gt,
                } => {
                    i = if any_within(shapelet, series, *threshold)? {
                        *le
                    } else {
                        *gt
                    };
                }
            }
        }
    }

    /// All root-to-leaf paths as `(conditions, leaf class)`, in depth-first
    /// order visiting the `gt` child before the `le` child.
    pub fn paths(&self) -> Vec<(Vec<PathCondition>, usize)> {
        let mut out = Vec::with_capacity(self.leaf_count());
        let mut stack = vec![(0usize, Vec::new())];
        while let Some((i, conds)) = stack.pop() {
            match &self.nodes[i] {
                Node::Leaf { class } => out.push((conds, *class)),
                Node::Split {
                    shapelet,
                    threshold,
                    le,
                    gt,
                } => {
                    let branch = |direction| {
                        let mut c: Vec<PathCondition> = conds.clone();
                        c.push(PathCondition {
                            shapelet: shapelet.clone(),
                            threshold: *threshold,
                            direction,
                        });
                        c
                    };
                    // pushed in reverse so `gt` is visited first
                    stack.push((*le, branch(Direction::Le)));
                    stack.push((*gt, branch(Direction::Gt)));
                }
            }
        }
        out
    }

    fn max_shapelet_requirement(&self) -> usize {
        self.nodes
            .iter()
            .map(|n| match n {
                Node::Split { shapelet, .. } => shapelet.min_series_len(),
                Node::Leaf { .. } => 0,
            })
            .max()
            .unwrap_or(0)
    }
}

/// Training hyperparameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Hyperparameters {
    pub n_trees: usize,
    /// Candidate shapelets sampled at every node.
    pub shapelets_per_node: usize,
    pub min_len: usize,
    /// `None` means up to the shortest training series.
    pub max_len: Option<usize>,
    pub seed: u64,
    /// Grow each tree on a bootstrap resample of the training set.
    pub bootstrap: bool,
}

impl Default for Hyperparameters {
    fn default() -> Self {
        Self {
            n_trees: 100,
            shapelets_per_node: 100,
            min_len: 2,
            max_len: None,
            seed: 0,
            bootstrap: true,
        }
    }
}

/// Total order on labels used for tie-breaking: labels that parse as numbers
/// sort numerically and come before all other labels, which sort bytewise.
pub fn label_order(a: &str, b: &str) -> Ordering {
    match (a.trim().parse::<f64>(), b.trim().parse::<f64>()) {
        (Ok(x), Ok(y)) if x.is_finite() && y.is_finite() => {
            x.total_cmp(&y).then_with(|| a.cmp(b))
        }
        (Ok(x), Err(_)) if x.is_finite() => Ordering::Less,
        (Err(_), Ok(y)) if y.is_finite() => Ordering::Greater,
        _ => a.cmp(b),
    }
}

/// An ensemble of shapelet trees predicting by majority vote.
///
/// Vote ties go to the label that sorts first under [`label_order`].
#[derive(Debug, Clone, PartialEq)]
pub struct ShapeletForest {
    trees: Vec<ShapeletTree>,
    labels: Vec<String>,
    hyperparameters: Hyperparameters,
    min_series_len: usize,
}

impl ShapeletForest {
    /// Assemble a forest from explicit trees. `labels` must be distinct and
    /// is stored in [`label_order`]; leaf classes index the *given* order and
    /// are remapped.
    pub fn from_trees(
        trees: Vec<ShapeletTree>,
        labels: Vec<String>,
        hyperparameters: Hyperparameters,
    ) -> Result<Self> {
        if trees.is_empty() {
            return Err(contract("forest needs at least one tree"));
        }
        let mut sorted = labels.clone();
        sorted.sort_by(|a, b| label_order(a, b));
        sorted.dedup();
        if sorted.len() != labels.len() || labels.is_empty() {
            return Err(contract("forest labels must be distinct and non-empty"));
        }
        let remap: Vec<usize> = labels
            .iter()
            .map(|l| sorted.iter().position(|s| s == l).unwrap())
            .collect();
        let trees = trees
            .into_iter()
            .map(|t| {
                let nodes = t
                    .nodes
                    .into_iter()
                    .map(|n| match n {
                        Node::Leaf { class } => Node::Leaf {
                            class: remap.get(class).copied().unwrap_or(usize::MAX),
                        },
                        split => split,
                    })
                    .collect();
                ShapeletTree::from_nodes(nodes, sorted.len())
            })
            .collect::<Result<Vec<_>>>()?;
        let min_series_len = trees
            .iter()
            .map(ShapeletTree::max_shapelet_requirement)
            .max()
            .unwrap_or(0);
        Ok(Self {
            trees,
            labels: sorted,
            hyperparameters,
            min_series_len,
        })
    }

    pub fn trees(&self) -> &[ShapeletTree] {
        &self.trees
    }

    /// Labels seen at training, in [`label_order`].
    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn hyperparameters(&self) -> &Hyperparameters {
        &self.hyperparameters
    }

    /// Shortest series every node can be evaluated on.
    pub fn min_series_len(&self) -> usize {
        self.min_series_len
    }

    pub fn class_of(&self, label: &str) -> Result<usize> {
        self.labels
            .iter()
            .position(|l| l == label)
            .ok_or_else(|| contract(format!("unknown label '{label}'")))
    }

    pub fn label(&self, class: usize) -> &str {
        &self.labels[class]
    }

    fn check_len(&self, series: &[f64]) -> Result<()> {
        if series.len() < self.min_series_len {
            return Err(contract(format!(
                "series of length {} is shorter than the forest requires ({})",
                series.len(),
                self.min_series_len
            )));
        }
        Ok(())
    }

    /// Per-tree leaf classes.
    pub fn votes(&self, series: &[f64]) -> Result<Vec<usize>> {
        self.check_len(series)?;
        self.trees.iter().map(|t| t.predict_class(series)).collect()
    }

    pub fn predict_class(&self, series: &[f64]) -> Result<usize> {
        let votes = self.votes(series)?;
        Ok(majority(&votes, self.labels.len()))
    }

    pub fn predict(&self, series: &TimeSeries) -> Result<&str> {
        Ok(self.label(self.predict_class(series.values())?))
    }

    /// Decision paths ending in `label`, ordered by `(tree_index, path_index)`.
    /// Single-leaf trees have no conditions to tweak and contribute nothing.
    pub fn extract_paths(&self, label: &str) -> Result<Vec<DecisionPath>> {
        let class = self.class_of(label)?;
        let mut out = Vec::new();
        for (tree_index, tree) in self.trees.iter().enumerate() {
            for (path_index, (conditions, leaf)) in tree.paths().into_iter().enumerate() {
                if leaf == class && !conditions.is_empty() {
                    out.push(DecisionPath {
                        conditions,
                        label: label.to_string(),
                        tree_index,
                        path_index,
                    });
                }
            }
        }
        Ok(out)
    }
}

/// Most frequent class; ties go to the lowest class index.
pub fn majority(votes: &[usize], n_classes: usize) -> usize {
    let mut counts = vec![0usize; n_classes];
    for &v in votes {
        counts[v] += 1;
    }
    majority_of_counts(&counts)
}

pub(crate) fn majority_of_counts(counts: &[usize]) -> usize {
    let mut best = 0;
    for (c, &n) in counts.iter().enumerate() {
        if n > counts[best] {
            best = c;
        }
    }
    best
}
