use rand::Rng;
use serde::{Deserialize, Serialize};

use super::sampling::{GroupType, Pools, DEFAULT_LLM_FRACTION};
use super::HarnessError;
use crate::aggregate::{cv_evaluate, AggregatorKind, AggregatorSpec};
use crate::dataset::{Corpus, FoldAssignment, ResponseMatrix};
use crate::metrics::{accuracy_row, SubsetSelector};
use crate::rng::{derive_seed, rng_from};

pub const DEFAULT_REPEATS: usize = 100;
pub const DEFAULT_BOOTSTRAP_RESAMPLES: usize = 10_000;
pub const DEFAULT_CONFIDENCE: f64 = 0.95;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SweepConfig {
    pub group_types: Vec<GroupType>,
    pub sizes: Vec<usize>,
    pub repeats: usize,
    pub aggregators: Vec<AggregatorSpec>,
    pub seed: u64,
    pub llm_fraction: f64,
    pub bootstrap_resamples: usize,
    pub confidence: f64,
}

impl Default for SweepConfig {
    fn default() -> Self {
        SweepConfig {
            group_types: vec![GroupType::Llm, GroupType::Human, GroupType::Hybrid],
            sizes: (2..=16).collect(),
            repeats: DEFAULT_REPEATS,
            aggregators: AggregatorKind::ALL.iter().map(|&k| AggregatorSpec::new(k)).collect(),
            seed: 0,
            llm_fraction: DEFAULT_LLM_FRACTION,
            bootstrap_resamples: DEFAULT_BOOTSTRAP_RESAMPLES,
            confidence: DEFAULT_CONFIDENCE,
        }
    }
}

/// Mean out-of-fold accuracy of one (group type, size, aggregator) cell over
/// its sampled groups, with a percentile-bootstrap interval.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepCell {
    pub group_type: GroupType,
    pub size: usize,
    pub aggregator: AggregatorKind,
    pub repeats: usize,
    pub mean_accuracy: f64,
    pub ci_low: f64,
    pub ci_high: f64,
}

fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Linear-interpolation quantile of sorted data.
fn quantile(sorted: &[f64], q: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * q;
    let (lo, hi) = (h.floor() as usize, h.ceil() as usize);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

/// Percentile bootstrap interval for the mean of `values`.
pub fn bootstrap_interval(values: &[f64], resamples: usize, confidence: f64, seed: u64) -> (f64, f64) {
    let n = values.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    if n == 1 || resamples == 0 || values.iter().all(|&v| v == values[0]) {
        let m = mean(values);
        return (m, m);
    }
    let mut rng = rng_from(seed);
    let mut means: Vec<f64> = (0..resamples)
        .map(|_| (0..n).map(|_| values[rng.gen_range(0..n)]).sum::<f64>() / n as f64)
        .collect();
    means.sort_by(f64::total_cmp);
    let alpha = (1.0 - confidence) / 2.0;
    (quantile(&means, alpha), quantile(&means, 1.0 - alpha))
}

#[cfg(feature = "parallel")]
fn par_map<T: Sync, R: Send>(items: &[T], f: impl Fn(&T) -> R + Sync + Send) -> Vec<R> {
    use rayon::prelude::*;
    items.par_iter().map(f).collect()
}

#[cfg(not(feature = "parallel"))]
fn par_map<T: Sync, R: Send>(items: &[T], f: impl Fn(&T) -> R + Sync + Send) -> Vec<R> {
    items.iter().map(f).collect()
}

fn group_index(g: GroupType) -> u64 {
    GroupType::ALL.iter().position(|&x| x == g).expect("listed") as u64
}

/// Samples `repeats` groups per (group type, size), evaluates every
/// aggregator on the same groups out of fold, and summarizes each cell.
/// Group draws derive from `config.seed` and the cell coordinates, so results
/// do not depend on scheduling; aggregators keep their own seeds, so a fixed
/// group always gets the same out-of-fold predictions.
pub fn run_size_sweep(
    corpus: &Corpus,
    responses: &ResponseMatrix,
    pools: &Pools,
    config: &SweepConfig,
    folds: &FoldAssignment,
) -> Result<Vec<SweepCell>, HarnessError> {
    if config.repeats == 0 || config.sizes.is_empty() || config.aggregators.is_empty() || config.group_types.is_empty() {
        return Err(HarnessError::Config("sweep needs sizes, repeats, aggregators and group types".into()));
    }
    if !(0.0 < config.confidence && config.confidence < 1.0) {
        return Err(HarnessError::Config(format!("confidence {}", config.confidence)));
    }
    responses.ensure_aligned(corpus)?;

    let mut tasks = Vec::new();
    for &g in &config.group_types {
        for &size in &config.sizes {
            for r in 0..config.repeats {
                tasks.push((g, size, r));
            }
        }
    }
    let results = par_map(&tasks, |&(g, size, r)| -> Result<Vec<f64>, HarnessError> {
        let seed = derive_seed(config.seed, &[group_index(g), size as u64, r as u64]);
        let members = pools.sample(g, size, config.llm_fraction, seed)?;
        config
            .aggregators
            .iter()
            .map(|spec| {
                let out = cv_evaluate(spec, corpus, responses, &members, folds)?;
                Ok(accuracy_row(corpus, &out.predictions, &SubsetSelector::all())?)
            })
            .collect()
    });
    let results = results.into_iter().collect::<Result<Vec<_>, _>>()?;

    let mut cells = Vec::new();
    for (gi, &g) in config.group_types.iter().enumerate() {
        for (si, &size) in config.sizes.iter().enumerate() {
            let start = (gi * config.sizes.len() + si) * config.repeats;
            let block = &results[start..start + config.repeats];
            for (a, spec) in config.aggregators.iter().enumerate() {
                let accs: Vec<f64> = block.iter().map(|r| r[a]).collect();
                let boot_seed = derive_seed(config.seed, &[0xb0, group_index(g), size as u64, a as u64]);
                let (ci_low, ci_high) = bootstrap_interval(&accs, config.bootstrap_resamples, config.confidence, boot_seed);
                cells.push(SweepCell {
                    group_type: g,
                    size,
                    aggregator: spec.kind,
                    repeats: config.repeats,
                    mean_accuracy: mean(&accs),
                    ci_low,
                    ci_high,
                });
            }
        }
    }
    Ok(cells)
}
