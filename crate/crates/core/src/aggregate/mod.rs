//! Crowd aggregation: simple averages, simplex-constrained stacking and
//! ExpertiseTrees, plus the cross-validated evaluation loop.

mod stacking;
mod tree;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

pub use stacking::{fit_stacked, predict_stacked, StackedWeights, TrainingSet};
pub use tree::{fit_expertise_tree, predict_tree, ExpertiseTreeModel, TreeNode};

use crate::dataset::{Category, Corpus, DatasetError, FoldAssignment, LikelihoodScale, ResponseMatrix};

#[derive(Debug, thiserror::Error)]
pub enum AggregateError {
    #[error("no member predictions")]
    NoPredictions,
    #[error("insufficient training data: {0}")]
    InsufficientData(String),
    #[error("member `{0}` has a nonzero weight but no prediction")]
    MissingMemberPrediction(String),
    #[error("no leaf covers context `{0}`")]
    UnroutableContext(Category),
    #[error("unknown member `{0}`")]
    UnknownMember(String),
    #[error("empty member list")]
    EmptyGroup,
    #[error("fold assignment does not match the corpus")]
    FoldMismatch,
    #[error(transparent)]
    Dataset(#[from] DatasetError),
}

/// Arithmetic mean of the present predictions.
pub fn simple_average(predictions: &[Option<f64>]) -> Result<f64, AggregateError> {
    let (sum, n, lo, hi) = predictions.iter().flatten().fold(
        (0.0, 0usize, f64::INFINITY, f64::NEG_INFINITY),
        |(s, n, lo, hi), &p| (s + p, n + 1, lo.min(p), hi.max(p)),
    );
    if n == 0 {
        return Err(AggregateError::NoPredictions);
    }
    Ok((sum / n as f64).clamp(lo, hi))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AggregatorKind {
    SimpleAverage,
    WeightedAverage,
    ExpertiseTree,
}

impl AggregatorKind {
    pub const ALL: [AggregatorKind; 3] = [
        AggregatorKind::SimpleAverage,
        AggregatorKind::WeightedAverage,
        AggregatorKind::ExpertiseTree,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            AggregatorKind::SimpleAverage => "simple_average",
            AggregatorKind::WeightedAverage => "weighted_average",
            AggregatorKind::ExpertiseTree => "expertise_tree",
        }
    }

    /// Row-label prefix used in bias reports, e.g. `average(LLM)`.
    pub fn report_label(self) -> &'static str {
        match self {
            AggregatorKind::SimpleAverage => "average",
            AggregatorKind::WeightedAverage => "WeightedAverage",
            AggregatorKind::ExpertiseTree => "ExpertiseTree",
        }
    }
}

impl fmt::Display for AggregatorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for AggregatorKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "simple_average" | "average" => Ok(AggregatorKind::SimpleAverage),
            "weighted_average" | "stacking" => Ok(AggregatorKind::WeightedAverage),
            "expertise_tree" | "tree" => Ok(AggregatorKind::ExpertiseTree),
            other => Err(format!("unknown aggregator `{other}`")),
        }
    }
}

pub const DEFAULT_RIDGE: f64 = 1e-3;
pub const DEFAULT_SPLIT_THRESHOLD: f64 = 1e-4;
pub const DEFAULT_INNER_FOLDS: usize = 3;

/// Aggregator choice plus hyperparameters; inapplicable ones are ignored.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AggregatorSpec {
    pub kind: AggregatorKind,
    /// Shrinkage toward uniform weights.
    pub ridge: f64,
    /// Minimum inner-CV squared-error reduction for a split; `inf` disables splits.
    #[serde(with = "inf_as_string")]
    pub split_threshold: f64,
    pub inner_folds: usize,
    /// Seed for the inner fold assignment.
    pub seed: u64,
}

impl Default for AggregatorSpec {
    fn default() -> Self {
        AggregatorSpec::new(AggregatorKind::SimpleAverage)
    }
}

impl AggregatorSpec {
    pub fn new(kind: AggregatorKind) -> Self {
        AggregatorSpec {
            kind,
            ridge: DEFAULT_RIDGE,
            split_threshold: DEFAULT_SPLIT_THRESHOLD,
            inner_folds: DEFAULT_INNER_FOLDS,
            seed: 0,
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }
}

/// Infinite thresholds are written as the string `"inf"` so JSON stays valid.
mod inf_as_string {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_infinite() && *v > 0.0 {
            s.serialize_str("inf")
        } else {
            s.serialize_f64(*v)
        }
    }

    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Repr {
        Num(f64),
        Text(String),
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        match Repr::deserialize(d)? {
            Repr::Num(v) => Ok(v),
            Repr::Text(t) if matches!(t.as_str(), "inf" | "infinity" | "+inf") => Ok(f64::INFINITY),
            Repr::Text(t) => Err(serde::de::Error::custom(format!("invalid threshold `{t}`"))),
        }
    }
}

/// A fitted aggregation model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FittedAggregator {
    SimpleAverage { member_ids: Vec<String> },
    WeightedAverage { weights: StackedWeights },
    ExpertiseTree { tree: ExpertiseTreeModel },
}

impl FittedAggregator {
    pub fn fit(spec: &AggregatorSpec, set: &TrainingSet) -> Result<Self, AggregateError> {
        Ok(match spec.kind {
            AggregatorKind::SimpleAverage => FittedAggregator::SimpleAverage {
                member_ids: set.member_ids().to_vec(),
            },
            AggregatorKind::WeightedAverage => FittedAggregator::WeightedAverage {
                weights: fit_stacked(set, spec.ridge)?,
            },
            AggregatorKind::ExpertiseTree => FittedAggregator::ExpertiseTree {
                tree: fit_expertise_tree(set, spec)?,
            },
        })
    }

    pub fn predict(&self, context: Category, predictions: &[Option<f64>]) -> Result<f64, AggregateError> {
        match self {
            FittedAggregator::SimpleAverage { .. } => simple_average(predictions),
            FittedAggregator::WeightedAverage { weights } => weights.predict(predictions),
            FittedAggregator::ExpertiseTree { tree } => tree.predict(context, predictions),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("model serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }
}

/// Out-of-fold aggregate predictions and the model fitted for each fold.
#[derive(Debug, Clone, PartialEq)]
pub struct CvOutcome {
    /// One likelihood per headline in corpus order; `None` where a member
    /// needed by the fold model did not answer.
    pub predictions: Vec<Option<f64>>,
    pub models: Vec<FittedAggregator>,
}

impl CvOutcome {
    /// Wraps the predictions as a one-row aggregate matrix.
    pub fn to_matrix(&self, corpus: &Corpus, label: &str) -> Result<ResponseMatrix, AggregateError> {
        let mut m = ResponseMatrix::new(corpus, LikelihoodScale::Continuous);
        m.push_row(label, self.predictions.clone())?;
        Ok(m)
    }
}

/// For each fold, fits on the other folds and predicts the held-out
/// headlines; folds are pair-coupled, so no model sees a headline or its
/// partner before predicting it.
pub fn cv_evaluate(
    spec: &AggregatorSpec,
    corpus: &Corpus,
    responses: &ResponseMatrix,
    member_ids: &[String],
    folds: &FoldAssignment,
) -> Result<CvOutcome, AggregateError> {
    responses.ensure_aligned(corpus)?;
    if folds.assignment().len() != corpus.len() {
        return Err(AggregateError::FoldMismatch);
    }
    if member_ids.is_empty() {
        return Err(AggregateError::EmptyGroup);
    }
    let member_rows = member_ids
        .iter()
        .map(|m| responses.row(m).map_err(|_| AggregateError::UnknownMember(m.clone())))
        .collect::<Result<Vec<_>, _>>()?;
    let predictions_at = |i: usize| -> Vec<Option<f64>> { member_rows.iter().map(|r| r[i]).collect() };

    if spec.kind == AggregatorKind::SimpleAverage {
        let predictions = (0..corpus.len()).map(|i| simple_average(&predictions_at(i)).ok()).collect();
        return Ok(CvOutcome {
            predictions,
            models: vec![
                FittedAggregator::SimpleAverage {
                    member_ids: member_ids.to_vec()
                };
                folds.k()
            ],
        });
    }

    let mut predictions = vec![None; corpus.len()];
    let mut models = Vec::with_capacity(folds.k());
    for f in 0..folds.k() {
        let train = (0..corpus.len()).filter(|&i| folds.fold_of_index(i) != f);
        let set = TrainingSet::new(responses, corpus, member_ids, train)?;
        let model = FittedAggregator::fit(spec, &set)?;
        for i in (0..corpus.len()).filter(|&i| folds.fold_of_index(i) == f) {
            predictions[i] = match model.predict(corpus.headlines()[i].category, &predictions_at(i)) {
                Ok(p) => Some(p),
                Err(AggregateError::MissingMemberPrediction(_)) | Err(AggregateError::NoPredictions) => None,
                Err(e) => return Err(e),
            };
        }
        models.push(model);
    }
    Ok(CvOutcome { predictions, models })
}
