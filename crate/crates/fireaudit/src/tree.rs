//! CART-style decision tree, written from scratch so the learned structure
//! is fully inspectable: stratified splitting, greedy Gini fitting with
//! deterministic tie-breaks, evaluation, impurity-decrease feature
//! importances and the nighttime constraint probe.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::records::{Confidence, FireDetection};
use crate::seeding::{derive_seed, domain};

/// Fixed feature order; index 4 is the 0/1 night flag.
pub const FEATURE_NAMES: [&str; 5] = ["brightness", "scan", "track", "frp", "is_night"];
pub const N_FEATURES: usize = 5;
const N_CLASSES: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FeatureRow {
    /// [brightness, scan, track, frp, is_night]
    pub features: [f64; N_FEATURES],
    pub label: Confidence,
}

impl FeatureRow {
    pub fn from_record(rec: &FireDetection) -> FeatureRow {
        FeatureRow {
            features: [
                rec.bright_ti4,
                rec.scan,
                rec.track,
                rec.frp,
                if rec.is_night() { 1.0 } else { 0.0 },
            ],
            label: rec.confidence,
        }
    }

    pub fn is_night(&self) -> bool {
        self.features[4] == 1.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error, Serialize, Deserialize)]
pub enum TreeError {
    #[error("class `{class}` has only {count} rows; stratified splitting needs at least 2")]
    ClassTooSmall { class: Confidence, count: usize },
    #[error("test fraction must lie in [0, 1]")]
    InvalidFraction,
    #[error("empty training set")]
    EmptyTrainingSet,
    #[error("empty test set")]
    EmptyTestSet,
    #[error("tree has no splits; feature importances are undefined")]
    SingleLeafTree,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TreeParams {
    /// Maximum number of splits along any root-to-leaf path; `None` is
    /// unlimited.
    pub max_depth: Option<usize>,
    pub min_samples_split: usize,
    pub min_samples_leaf: usize,
}

impl Default for TreeParams {
    fn default() -> Self {
        TreeParams { max_depth: Some(10), min_samples_split: 2, min_samples_leaf: 1 }
    }
}

/// Tree node. Internal nodes carry their training bookkeeping (sample
/// count, impurity, weighted impurity decrease) so importances can be
/// recomputed and audited.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Node {
    Split {
        feature: usize,
        threshold: f64,
        n: usize,
        impurity: f64,
        /// (n / n_train) · (impurity − weighted child impurity).
        weighted_decrease: f64,
        left: Box<Node>,
        right: Box<Node>,
    },
    Leaf {
        /// Training rows per class, order h, l, n.
        class_counts: [u64; N_CLASSES],
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecisionTree {
    pub root: Node,
    pub params: TreeParams,
    pub n_train: usize,
}

fn gini(counts: &[u64; N_CLASSES], n: f64) -> f64 {
    let mut sum_sq = 0.0;
    for &c in counts {
        let p = c as f64 / n;
        sum_sq += p * p;
    }
    1.0 - sum_sq
}

fn class_counts(rows: &[FeatureRow], idx: &[u32]) -> [u64; N_CLASSES] {
    let mut counts = [0u64; N_CLASSES];
    for &i in idx {
        counts[rows[i as usize].label.index()] += 1;
    }
    counts
}

struct BestSplit {
    feature: usize,
    threshold: f64,
    weighted_child_impurity: f64,
}

/// Scan every feature for the weighted-Gini-minimizing threshold.
/// Candidates are midpoints between consecutive distinct sorted values.
/// Features are visited in index order and thresholds in ascending order,
/// and a candidate only replaces the incumbent when strictly better, which
/// realizes the tie-break: lower feature index first, then lower threshold.
fn best_split(
    rows: &[FeatureRow],
    idx: &[u32],
    min_samples_leaf: usize,
    scratch: &mut Vec<(f64, u8)>,
) -> Option<BestSplit> {
    let n = idx.len();
    let total = class_counts(rows, idx);
    let mut best: Option<BestSplit> = None;
    for feature in 0..N_FEATURES {
        scratch.clear();
        scratch.extend(
            idx.iter()
                .map(|&i| (rows[i as usize].features[feature], rows[i as usize].label.index() as u8)),
        );
        scratch.sort_unstable_by(|a, b| a.0.total_cmp(&b.0));
        let mut left = [0u64; N_CLASSES];
        let mut right = total;
        for k in 0..n - 1 {
            let class = scratch[k].1 as usize;
            left[class] += 1;
            right[class] -= 1;
            let (a, b) = (scratch[k].0, scratch[k + 1].0);
            if a < b {
                let n_left = k + 1;
                let n_right = n - n_left;
                if n_left < min_samples_leaf || n_right < min_samples_leaf {
                    continue;
                }
                let weighted = (n_left as f64 * gini(&left, n_left as f64)
                    + n_right as f64 * gini(&right, n_right as f64))
                    / n as f64;
                if best.as_ref().map_or(true, |b| weighted < b.weighted_child_impurity) {
                    // Guard against the midpoint rounding onto `a`, which
                    // would route both values the same way.
                    let mid = (a + b) * 0.5;
                    let threshold = if mid > a { mid } else { b };
                    best = Some(BestSplit { feature, threshold, weighted_child_impurity: weighted });
                }
            }
        }
    }
    best
}

fn build_node(
    rows: &[FeatureRow],
    idx: Vec<u32>,
    depth: usize,
    params: &TreeParams,
    n_train: usize,
    scratch: &mut Vec<(f64, u8)>,
) -> Node {
    let counts = class_counts(rows, &idx);
    let n = idx.len();
    let node_impurity = gini(&counts, n as f64);
    let depth_allows = params.max_depth.map_or(true, |d| depth < d);
    let pure = counts.iter().filter(|&&c| c > 0).count() <= 1;

    if !depth_allows || pure || n < params.min_samples_split {
        return Node::Leaf { class_counts: counts };
    }
    let Some(split) = best_split(rows, &idx, params.min_samples_leaf, scratch) else {
        return Node::Leaf { class_counts: counts };
    };
    // Only splits that strictly decrease weighted impurity are accepted.
    if !(split.weighted_child_impurity < node_impurity) {
        return Node::Leaf { class_counts: counts };
    }

    let (left_idx, right_idx): (Vec<u32>, Vec<u32>) =
        idx.into_iter().partition(|&i| rows[i as usize].features[split.feature] < split.threshold);
    debug_assert!(!left_idx.is_empty() && !right_idx.is_empty());

    let weighted_decrease =
        (n as f64 / n_train as f64) * (node_impurity - split.weighted_child_impurity);
    Node::Split {
        feature: split.feature,
        threshold: split.threshold,
        n,
        impurity: node_impurity,
        weighted_decrease,
        left: Box::new(build_node(rows, left_idx, depth + 1, params, n_train, scratch)),
        right: Box::new(build_node(rows, right_idx, depth + 1, params, n_train, scratch)),
    }
}

/// Fit a tree by greedy recursive partitioning on weighted Gini impurity.
pub fn fit_tree(train: &[FeatureRow], params: TreeParams) -> Result<DecisionTree, TreeError> {
    if train.is_empty() {
        return Err(TreeError::EmptyTrainingSet);
    }
    let idx: Vec<u32> = (0..train.len() as u32).collect();
    let mut scratch = Vec::with_capacity(train.len());
    let root = build_node(train, idx, 0, &params, train.len(), &mut scratch);
    Ok(DecisionTree { root, params, n_train: train.len() })
}

impl DecisionTree {
    /// Route a feature vector to a leaf (left when value < threshold) and
    /// return the majority class; ties break toward the fixed class order
    /// h < l < n.
    pub fn predict(&self, features: &[f64; N_FEATURES]) -> Confidence {
        let mut node = &self.root;
        loop {
            match node {
                Node::Split { feature, threshold, left, right, .. } => {
                    node = if features[*feature] < *threshold { left } else { right };
                }
                Node::Leaf { class_counts } => {
                    let mut best = 0;
                    for k in 1..N_CLASSES {
                        if class_counts[k] > class_counts[best] {
                            best = k;
                        }
                    }
                    return Confidence::from_index(best);
                }
            }
        }
    }

    pub fn depth(&self) -> usize {
        fn walk(node: &Node) -> usize {
            match node {
                Node::Leaf { .. } => 0,
                Node::Split { left, right, .. } => 1 + walk(left).max(walk(right)),
            }
        }
        walk(&self.root)
    }

    pub fn n_splits(&self) -> usize {
        fn walk(node: &Node) -> usize {
            match node {
                Node::Leaf { .. } => 0,
                Node::Split { left, right, .. } => 1 + walk(left) + walk(right),
            }
        }
        walk(&self.root)
    }
}

/// Per-class precision/recall and the 3×3 confusion matrix
/// (rows = actual class, columns = predicted, order h, l, n).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalMetrics {
    pub accuracy: f64,
    pub precision: [f64; N_CLASSES],
    pub recall: [f64; N_CLASSES],
    pub confusion: [[u64; N_CLASSES]; N_CLASSES],
}

/// Evaluate on a held-out set.
pub fn evaluate(tree: &DecisionTree, test: &[FeatureRow]) -> Result<EvalMetrics, TreeError> {
    if test.is_empty() {
        return Err(TreeError::EmptyTestSet);
    }
    let mut confusion = [[0u64; N_CLASSES]; N_CLASSES];
    for row in test {
        let predicted = tree.predict(&row.features);
        confusion[row.label.index()][predicted.index()] += 1;
    }
    let correct: u64 = (0..N_CLASSES).map(|k| confusion[k][k]).sum();
    let ratio = |num: u64, den: u64| if den == 0 { 0.0 } else { num as f64 / den as f64 };
    let mut precision = [0.0; N_CLASSES];
    let mut recall = [0.0; N_CLASSES];
    for k in 0..N_CLASSES {
        let col: u64 = (0..N_CLASSES).map(|i| confusion[i][k]).sum();
        let row: u64 = confusion[k].iter().sum();
        precision[k] = ratio(confusion[k][k], col);
        recall[k] = ratio(confusion[k][k], row);
    }
    Ok(EvalMetrics { accuracy: correct as f64 / test.len() as f64, precision, recall, confusion })
}

/// Stratified train/test split: per class, round(count · test_fraction)
/// rows go to test. Deterministic under `seed`.
pub fn stratified_split(
    rows: &[FeatureRow],
    test_fraction: f64,
    seed: u64,
) -> Result<(Vec<FeatureRow>, Vec<FeatureRow>), TreeError> {
    if !(0.0..=1.0).contains(&test_fraction) {
        return Err(TreeError::InvalidFraction);
    }
    let mut train = Vec::new();
    let mut test = Vec::new();
    for (k, class) in Confidence::ALL.iter().enumerate() {
        let mut members: Vec<u32> = rows
            .iter()
            .enumerate()
            .filter(|(_, r)| r.label == *class)
            .map(|(i, _)| i as u32)
            .collect();
        if members.is_empty() {
            continue;
        }
        if members.len() < 2 {
            return Err(TreeError::ClassTooSmall { class: *class, count: members.len() });
        }
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, domain::SPLIT + k as u64));
        members.shuffle(&mut rng);
        let n_test = ((members.len() as f64 * test_fraction).round() as usize).min(members.len());
        for &i in &members[..n_test] {
            test.push(rows[i as usize]);
        }
        for &i in &members[n_test..] {
            train.push(rows[i as usize]);
        }
    }
    Ok((train, test))
}

/// Sum of weighted impurity decreases per feature, normalized to 1.
pub fn feature_importances(tree: &DecisionTree) -> Result<[f64; N_FEATURES], TreeError> {
    fn walk(node: &Node, acc: &mut [f64; N_FEATURES]) {
        if let Node::Split { feature, weighted_decrease, left, right, .. } = node {
            acc[*feature] += weighted_decrease;
            walk(left, acc);
            walk(right, acc);
        }
    }
    let mut acc = [0.0; N_FEATURES];
    walk(&tree.root, &mut acc);
    let total: f64 = acc.iter().sum();
    if total <= 0.0 {
        return Err(TreeError::SingleLeafTree);
    }
    for v in &mut acc {
        *v /= total;
    }
    Ok(acc)
}

/// Count the supplied rows with is_night = 1 that the tree predicts as
/// low confidence.
pub fn night_constraint_probe(tree: &DecisionTree, rows: &[FeatureRow]) -> u64 {
    rows.iter()
        .filter(|r| r.is_night() && tree.predict(&r.features) == Confidence::Low)
        .count() as u64
}
