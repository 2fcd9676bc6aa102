//! Crowd aggregation and counterfactual bias auditing.
//!
//! The crate ingests (or synthesizes) responder likelihood judgments on
//! counterfactual headline pairs and provides:
//!
//! - [`dataset`]: corpus, response matrix, responder profiles and pair-coupled folds
//! - [`metrics`]: accuracy, counterfactual bias, framing effects, Q-statistic and
//!   the Mann-Whitney / Wilcoxon tests behind their p-values
//! - [`aggregate`]: simple averages, simplex-constrained stacking and ExpertiseTrees
//! - [`crowdsim`]: synthetic crowds with planted accuracy, bias, framing and correlation
//! - [`elicit`]: the 4-shot prompt protocol against chat-completion endpoints
//! - [`harness`]: group sampling, size sweeps, bias reports and run configuration

pub mod aggregate;
pub mod crowdsim;
pub mod dataset;
pub mod elicit;
pub mod harness;
pub mod metrics;
mod rng;
mod solver;

pub use aggregate::{AggregateError, AggregatorKind, AggregatorSpec, ExpertiseTreeModel, StackedWeights};
pub use dataset::{
    Category, Corpus, DatasetError, FoldAssignment, Group, Headline, ResponderKind, ResponderProfile,
    ResponseMatrix, Sentiment, Status,
};
pub use metrics::{BiasResult, MetricsError, SubsetSelector};

/// Crate-level error, wrapping the per-module errors.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error(transparent)]
    Dataset(#[from] dataset::DatasetError),
    #[error(transparent)]
    Metrics(#[from] metrics::MetricsError),
    #[error(transparent)]
    Aggregate(#[from] aggregate::AggregateError),
    #[error(transparent)]
    Crowdsim(#[from] crowdsim::CrowdsimError),
    #[error(transparent)]
    Elicit(#[from] elicit::ElicitError),
    #[error(transparent)]
    Harness(#[from] harness::HarnessError),
}

impl Error {
    /// Short stable name of the error class, used for CLI exit reporting.
    pub fn class(&self) -> &'static str {
        match self {
            Error::Dataset(_) => "DatasetError",
            Error::Metrics(_) => "MetricsError",
            Error::Aggregate(_) => "AggregateError",
            Error::Crowdsim(_) => "CrowdsimError",
            Error::Elicit(_) => "ElicitError",
            Error::Harness(_) => "HarnessError",
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
