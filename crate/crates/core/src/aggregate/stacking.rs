use serde::{Deserialize, Serialize};

use super::AggregateError;
use crate::dataset::{Category, Corpus, ResponseMatrix};
use crate::solver::SimplexQp;

/// Constant per-member weights on the simplex.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StackedWeights {
    pub member_ids: Vec<String>,
    pub weights: Vec<f64>,
}

impl StackedWeights {
    pub fn uniform(member_ids: Vec<String>) -> Self {
        let w = 1.0 / member_ids.len() as f64;
        let weights = vec![w; member_ids.len()];
        StackedWeights { member_ids, weights }
    }

    pub fn weight_of(&self, member: &str) -> Option<f64> {
        self.member_ids.iter().position(|m| m == member).map(|i| self.weights[i])
    }

    /// Weighted mean of `predictions` (aligned with `member_ids`). Members with
    /// zero weight may be missing.
    pub fn predict(&self, predictions: &[Option<f64>]) -> Result<f64, AggregateError> {
        let mut sum = 0.0;
        let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
        for ((id, &w), p) in self.member_ids.iter().zip(&self.weights).zip(predictions) {
            if w == 0.0 {
                continue;
            }
            let p = p.ok_or_else(|| AggregateError::MissingMemberPrediction(id.clone()))?;
            sum += w * p;
            lo = lo.min(p);
            hi = hi.max(p);
        }
        if lo > hi {
            return Err(AggregateError::NoPredictions);
        }
        Ok(sum.clamp(lo, hi))
    }
}

pub fn predict_stacked(model: &StackedWeights, predictions: &[Option<f64>]) -> Result<f64, AggregateError> {
    model.predict(predictions)
}

/// Complete training rows for a fixed member list: member predictions,
/// binary targets, and the context and pair of each row.
#[derive(Debug, Clone)]
pub struct TrainingSet {
    pub(crate) member_ids: Vec<String>,
    pub(crate) x: Vec<Vec<f64>>,
    pub(crate) targets: Vec<f64>,
    pub(crate) categories: Vec<Category>,
    /// Lower corpus index of the row's counterfactual pair.
    pub(crate) pair_keys: Vec<usize>,
}

impl TrainingSet {
    /// Rows for the given corpus indices where every member answered; targets
    /// are 1 for genuine and 0 for altered headlines.
    pub fn new(
        responses: &ResponseMatrix,
        corpus: &Corpus,
        member_ids: &[String],
        rows: impl IntoIterator<Item = usize>,
    ) -> Result<Self, AggregateError> {
        responses.ensure_aligned(corpus)?;
        if member_ids.is_empty() {
            return Err(AggregateError::EmptyGroup);
        }
        let member_rows = member_ids
            .iter()
            .map(|m| responses.row(m).map_err(|_| AggregateError::UnknownMember(m.clone())))
            .collect::<Result<Vec<_>, _>>()?;
        let mut set = TrainingSet {
            member_ids: member_ids.to_vec(),
            x: Vec::new(),
            targets: Vec::new(),
            categories: Vec::new(),
            pair_keys: Vec::new(),
        };
        for i in rows {
            let preds: Option<Vec<f64>> = member_rows.iter().map(|r| r[i]).collect();
            if let Some(preds) = preds {
                let h = &corpus.headlines()[i];
                set.x.push(preds);
                set.targets.push(h.status.target());
                set.categories.push(h.category);
                set.pair_keys.push(i.min(corpus.partner_index(i)));
            }
        }
        Ok(set)
    }

    /// Replaces the status-derived targets.
    pub fn with_targets(mut self, targets: Vec<f64>) -> Result<Self, AggregateError> {
        if targets.len() != self.x.len() {
            return Err(AggregateError::InsufficientData(format!(
                "{} targets for {} rows",
                targets.len(),
                self.x.len()
            )));
        }
        self.targets = targets;
        Ok(self)
    }

    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }

    pub fn member_ids(&self) -> &[String] {
        &self.member_ids
    }
}

/// Simplex-constrained least squares on the given rows of `set`, shrunk
/// toward uniform weights by `ridge`:
///
/// ```text
/// minimize (1/n) sum_h (sum_m w_m p_mh - t_h)^2 + ridge * |w - 1/M|^2
/// ```
pub(crate) fn fit_rows(set: &TrainingSet, rows: &[usize], ridge: f64) -> Result<StackedWeights, AggregateError> {
    let m = set.member_ids.len();
    if rows.len() < 2 {
        return Err(AggregateError::InsufficientData(format!(
            "{} complete training rows, need at least 2",
            rows.len()
        )));
    }
    if m == 1 {
        return Ok(StackedWeights {
            member_ids: set.member_ids.clone(),
            weights: vec![1.0],
        });
    }
    let n = rows.len() as f64;
    let mut g = vec![0.0; m * m];
    let mut c = vec![0.0; m];
    for &r in rows {
        let x = &set.x[r];
        for i in 0..m {
            c[i] += x[i] * set.targets[r];
            for j in i..m {
                g[i * m + j] += x[i] * x[j];
            }
        }
    }
    let u = 1.0 / m as f64;
    for i in 0..m {
        c[i] = c[i] / n + ridge * u;
        for j in i..m {
            g[i * m + j] /= n;
            g[j * m + i] = g[i * m + j];
        }
        g[i * m + i] += ridge;
    }
    let weights = SimplexQp { g: &g, c: &c }.solve();
    Ok(StackedWeights {
        member_ids: set.member_ids.clone(),
        weights,
    })
}

/// Fits constant stacking weights on every row of the training set.
pub fn fit_stacked(set: &TrainingSet, ridge: f64) -> Result<StackedWeights, AggregateError> {
    let rows: Vec<usize> = (0..set.len()).collect();
    fit_rows(set, &rows, ridge)
}
