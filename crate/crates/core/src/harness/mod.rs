//! Experiment orchestration: group sampling, size sweeps, bias reports,
//! report emission and the declarative run configuration behind the CLI.

mod config;
mod report;
mod sampling;
mod sweep;

pub use config::{
    run_elicit, run_evaluate, run_ingest, run_report, run_simulate, run_sweep, AggregatorEntry, DataSection,
    ElicitSection, Overrides, ReportSection, RunConfig, SimulateSection, SimulatedMember, SweepSection, Workspace,
};
#[cfg(feature = "http")]
pub use config::http_endpoint;
pub use report::{
    build_bias_report, build_q_matrix, emit_report, read_report, ExperimentReport, Provenance, QMatrix, ReportCell,
    ReportGroup, ReportRow, MANIFEST_JSON, Q_CSV, REPORT_JSON, ROWS_CSV, SWEEP_CSV,
};
pub use sampling::{
    compose_hybrid, sample_group, GroupType, HybridSpec, PolicyKind, Pools, SamplingPolicy, DEFAULT_LLM_FRACTION,
};
pub use sweep::{
    bootstrap_interval, run_size_sweep, SweepCell, SweepConfig, DEFAULT_BOOTSTRAP_RESAMPLES, DEFAULT_CONFIDENCE,
    DEFAULT_REPEATS,
};

use crate::aggregate::AggregateError;
use crate::crowdsim::CrowdsimError;
use crate::dataset::DatasetError;
use crate::elicit::ElicitError;
use crate::metrics::MetricsError;

#[derive(Debug, thiserror::Error)]
pub enum HarnessError {
    #[error("pool too small: requested {requested}, available {available}")]
    PoolTooSmall { requested: usize, available: usize },
    #[error("responder `{0}` has no benchmark score")]
    MissingScores(String),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed report: {0}")]
    Parse(String),
    #[error(transparent)]
    Dataset(#[from] DatasetError),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
    #[error(transparent)]
    Aggregate(#[from] AggregateError),
    #[error(transparent)]
    Crowdsim(#[from] CrowdsimError),
    #[error(transparent)]
    Elicit(#[from] ElicitError),
}

impl HarnessError {
    /// Name of the underlying error class, for exit reporting.
    pub fn class(&self) -> &'static str {
        match self {
            HarnessError::Dataset(_) => "DatasetError",
            HarnessError::Metrics(_) => "MetricsError",
            HarnessError::Aggregate(_) => "AggregateError",
            HarnessError::Crowdsim(_) => "CrowdsimError",
            HarnessError::Elicit(_) => "ElicitError",
            HarnessError::PoolTooSmall { .. } => "PoolTooSmall",
            HarnessError::MissingScores(_) => "MissingScores",
            HarnessError::Io { .. } => "IoError",
            HarnessError::Config(_) => "ConfigError",
            HarnessError::Parse(_) => "ParseError",
        }
    }
}
