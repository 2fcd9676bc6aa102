//! ExpertiseTrees over the headline category.
//!
//! A node holds a set of categories. Growing a node fits flat stacking
//! weights, then scores every bipartition of its categories by inner
//! cross-validated squared error. The best split is adopted only when it
//! lowers that error by more than the split threshold; children recurse.

use serde::{Deserialize, Serialize};

use super::stacking::{fit_rows, StackedWeights, TrainingSet};
use super::{AggregateError, AggregatorSpec};
use crate::dataset::{deal_pairs, Category};
use crate::rng;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "node", rename_all = "snake_case")]
pub enum TreeNode {
    Leaf {
        categories: Vec<Category>,
        weights: StackedWeights,
    },
    Split {
        categories: Vec<Category>,
        left: Box<TreeNode>,
        right: Box<TreeNode>,
    },
}

impl TreeNode {
    pub fn categories(&self) -> &[Category] {
        match self {
            TreeNode::Leaf { categories, .. } | TreeNode::Split { categories, .. } => categories,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExpertiseTreeModel {
    pub root: TreeNode,
}

impl ExpertiseTreeModel {
    pub fn leaf(categories: Vec<Category>, weights: StackedWeights) -> Self {
        ExpertiseTreeModel {
            root: TreeNode::Leaf { categories, weights },
        }
    }

    pub fn split_count(&self) -> usize {
        fn count(n: &TreeNode) -> usize {
            match n {
                TreeNode::Leaf { .. } => 0,
                TreeNode::Split { left, right, .. } => 1 + count(left) + count(right),
            }
        }
        count(&self.root)
    }

    /// Leaves in left-to-right order.
    pub fn leaves(&self) -> Vec<(&[Category], &StackedWeights)> {
        fn walk<'a>(n: &'a TreeNode, out: &mut Vec<(&'a [Category], &'a StackedWeights)>) {
            match n {
                TreeNode::Leaf { categories, weights } => out.push((categories, weights)),
                TreeNode::Split { left, right, .. } => {
                    walk(left, out);
                    walk(right, out);
                }
            }
        }
        let mut out = Vec::new();
        walk(&self.root, &mut out);
        out
    }

    pub fn route(&self, context: Category) -> Result<&StackedWeights, AggregateError> {
        let mut node = &self.root;
        loop {
            if !node.categories().contains(&context) {
                return Err(AggregateError::UnroutableContext(context));
            }
            match node {
                TreeNode::Leaf { weights, .. } => return Ok(weights),
                TreeNode::Split { left, right, .. } => {
                    node = if left.categories().contains(&context) { left } else { right };
                }
            }
        }
    }

    pub fn predict(&self, context: Category, predictions: &[Option<f64>]) -> Result<f64, AggregateError> {
        self.route(context)?.predict(predictions)
    }
}

pub fn predict_tree(
    model: &ExpertiseTreeModel,
    context: Category,
    predictions: &[Option<f64>],
) -> Result<f64, AggregateError> {
    model.predict(context, predictions)
}

pub fn fit_expertise_tree(set: &TrainingSet, spec: &AggregatorSpec) -> Result<ExpertiseTreeModel, AggregateError> {
    let rows: Vec<usize> = (0..set.len()).collect();
    let mut categories: Vec<Category> = set.categories.clone();
    categories.sort();
    categories.dedup();
    Ok(ExpertiseTreeModel {
        root: grow(set, &rows, categories, spec, 0)?,
    })
}

fn grow(
    set: &TrainingSet,
    rows: &[usize],
    categories: Vec<Category>,
    spec: &AggregatorSpec,
    depth: u64,
) -> Result<TreeNode, AggregateError> {
    let weights = fit_rows(set, rows, spec.ridge)?;
    let leaf = |weights| TreeNode::Leaf {
        categories: categories.clone(),
        weights,
    };
    if categories.len() < 2 || spec.split_threshold == f64::INFINITY {
        return Ok(leaf(weights));
    }

    let node_seed = rng::derive_seed(
        spec.seed,
        &[depth, categories.iter().fold(0u64, |acc, c| acc * 4 + *c as u64 + 1)],
    );
    let Some(folds) = inner_folds(set, rows, spec.inner_folds, node_seed) else {
        return Ok(leaf(weights));
    };
    let Some(flat_loss) = cv_loss(set, rows, &folds, spec, None) else {
        return Ok(leaf(weights));
    };

    let mut best: Option<(f64, Vec<Category>, Vec<Category>)> = None;
    for (left, right) in bipartitions(&categories) {
        let Some(loss) = cv_loss(set, rows, &folds, spec, Some(&left)) else {
            continue;
        };
        let gain = flat_loss - loss;
        if best.as_ref().is_none_or(|(g, _, _)| gain > *g) {
            best = Some((gain, left, right));
        }
    }

    match best {
        Some((gain, left, right)) if gain > spec.split_threshold => {
            let part = |side: &[Category]| -> Vec<usize> {
                rows.iter().copied().filter(|&r| side.contains(&set.categories[r])).collect()
            };
            Ok(TreeNode::Split {
                categories: categories.clone(),
                left: Box::new(grow(set, &part(&left), left, spec, depth + 1)?),
                right: Box::new(grow(set, &part(&right), right, spec, depth + 1)?),
            })
        }
        _ => Ok(leaf(weights)),
    }
}

/// All splits of `categories` into two non-empty sides; the last category
/// always lands on the right so each partition appears once.
pub(crate) fn bipartitions(categories: &[Category]) -> Vec<(Vec<Category>, Vec<Category>)> {
    let n = categories.len();
    if n < 2 {
        return Vec::new();
    }
    (1u32..(1 << (n - 1)))
        .map(|mask| {
            let mut left = Vec::new();
            let mut right = Vec::new();
            for (i, &c) in categories.iter().enumerate() {
                if i < n - 1 && mask >> i & 1 == 1 {
                    left.push(c);
                } else {
                    right.push(c);
                }
            }
            (left, right)
        })
        .collect()
}

/// Pair-coupled inner fold index per row of `rows`.
fn inner_folds(set: &TrainingSet, rows: &[usize], k: usize, seed: u64) -> Option<Vec<usize>> {
    let mut keys: Vec<usize> = rows.iter().map(|&r| set.pair_keys[r]).collect();
    keys.sort_unstable();
    keys.dedup();
    if k < 2 || keys.len() < k {
        return None;
    }
    let pair_fold = deal_pairs(keys.len(), k, seed);
    Some(
        rows.iter()
            .map(|&r| pair_fold[keys.binary_search(&set.pair_keys[r]).expect("key present")])
            .collect(),
    )
}

/// Mean held-out squared error; with `left` set, each side is fitted and
/// scored separately. `None` when some fold cannot be fitted.
fn cv_loss(
    set: &TrainingSet,
    rows: &[usize],
    folds: &[usize],
    spec: &AggregatorSpec,
    left: Option<&[Category]>,
) -> Option<f64> {
    let k = folds.iter().copied().max()? + 1;
    let side_of = |r: usize| left.is_some_and(|l| l.contains(&set.categories[r]));
    let sides: &[bool] = if left.is_some() { &[true, false] } else { &[false] };

    let mut sse = 0.0;
    let mut count = 0usize;
    for f in 0..k {
        for &side in sides {
            let in_side = |r: usize| left.is_none() || side_of(r) == side;
            let train: Vec<usize> = rows
                .iter()
                .zip(folds)
                .filter(|&(&r, &rf)| rf != f && in_side(r))
                .map(|(&r, _)| r)
                .collect();
            let held: Vec<usize> = rows
                .iter()
                .zip(folds)
                .filter(|&(&r, &rf)| rf == f && in_side(r))
                .map(|(&r, _)| r)
                .collect();
            if held.is_empty() {
                continue;
            }
            let w = fit_rows(set, &train, spec.ridge).ok()?;
            for r in held {
                let p: f64 = set.x[r].iter().zip(&w.weights).map(|(a, b)| a * b).sum();
                sse += (p - set.targets[r]).powi(2);
                count += 1;
            }
        }
    }
    (count > 0).then(|| sse / count as f64)
}
