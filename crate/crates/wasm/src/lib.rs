//! Browser bindings: each export takes plain numbers and returns a JSON
//! string, so the page needs no glue beyond `JSON.parse`.

use crowdwise::aggregate::{AggregatorKind, AggregatorSpec};
use crowdwise::crowdsim::{generate_corpus, simulate_responses, simulated_mean_q, CrowdSpec, SyntheticResponderSpec};
use crowdwise::dataset::{make_folds, Category, ResponderKind, ResponderProfile};
use crowdwise::harness::{build_bias_report, run_size_sweep, GroupType, Pools, ReportGroup, SweepConfig};
use serde::Serialize;
use wasm_bindgen::prelude::*;

fn js_err(e: impl std::fmt::Display) -> JsError {
    JsError::new(&e.to_string())
}

fn to_json<T: Serialize>(v: &T) -> Result<String, JsError> {
    serde_json::to_string(v).map_err(js_err)
}

/// Mean pairwise Q of a small simulated crowd at the given shared-noise rate.
pub fn mean_q(accuracy: f64, rho: f64, pairs_per_cell: usize, seed: u64) -> Result<f64, String> {
    let spec = SyntheticResponderSpec::with_accuracy(accuracy);
    simulated_mean_q(&spec, rho, pairs_per_cell, seed).map_err(|e| e.to_string())
}

#[wasm_bindgen]
pub fn simulate_q(accuracy: f64, rho: f64, pairs_per_cell: u32, seed: u32) -> Result<f64, JsError> {
    mean_q(accuracy, rho, pairs_per_cell as usize, seed as u64).map_err(|e| JsError::new(&e))
}

#[derive(Serialize)]
struct SweepPoint {
    size: usize,
    mean_accuracy: f64,
    ci_low: f64,
    ci_high: f64,
}

/// Simple-average accuracy by group size for a homogeneous crowd of 16.
pub fn sweep_points(accuracy: f64, rho: f64, repeats: usize, seed: u64) -> Result<String, String> {
    let err = |e: &dyn std::fmt::Display| e.to_string();
    let corpus = generate_corpus(10, seed).map_err(|e| err(&e))?;
    let crowd = CrowdSpec::homogeneous(SyntheticResponderSpec::with_accuracy(accuracy).rho(rho), 16, seed);
    let responses = simulate_responses(&crowd, &corpus, seed).map_err(|e| err(&e))?;
    let profiles: Vec<_> = crowd
        .member_ids()
        .into_iter()
        .map(|id| ResponderProfile::new(id, ResponderKind::Synthetic, None))
        .collect();
    let folds = make_folds(&corpus, 5, seed).map_err(|e| err(&e))?;
    let config = SweepConfig {
        group_types: vec![GroupType::Synthetic],
        sizes: (2..=16).collect(),
        repeats: repeats.max(1),
        aggregators: vec![AggregatorSpec::new(AggregatorKind::SimpleAverage)],
        seed,
        bootstrap_resamples: 1000,
        ..Default::default()
    };
    let cells = run_size_sweep(&corpus, &responses, &Pools::from_profiles(&profiles), &config, &folds)
        .map_err(|e| err(&e))?;
    let points: Vec<_> = cells
        .into_iter()
        .map(|c| SweepPoint {
            size: c.size,
            mean_accuracy: c.mean_accuracy,
            ci_low: c.ci_low,
            ci_high: c.ci_high,
        })
        .collect();
    serde_json::to_string(&points).map_err(|e| err(&e))
}

#[wasm_bindgen]
pub fn size_sweep(accuracy: f64, rho: f64, repeats: u32, seed: u32) -> Result<String, JsError> {
    sweep_points(accuracy, rho, repeats as usize, seed as u64).map_err(|e| JsError::new(&e))
}

/// Bias report for eight responders sharing a planted ethnicity shift,
/// aggregated three ways.
#[wasm_bindgen]
pub fn bias_audit(ethnicity_shift: f64, accuracy: f64, pairs_per_cell: u32, seed: u32) -> Result<String, JsError> {
    let seed = seed as u64;
    let corpus = generate_corpus(pairs_per_cell as usize, seed).map_err(js_err)?;
    let spec = SyntheticResponderSpec::with_accuracy(accuracy).bias(Category::Ethnicity, ethnicity_shift);
    let crowd = CrowdSpec::homogeneous(spec, 8, seed);
    let responses = simulate_responses(&crowd, &corpus, seed).map_err(js_err)?;
    let folds = make_folds(&corpus, 5, seed).map_err(js_err)?;
    let groups = [ReportGroup {
        label: "synthetic".into(),
        members: crowd.member_ids(),
    }];
    let specs: Vec<_> = AggregatorKind::ALL.iter().map(|&k| AggregatorSpec::new(k).with_seed(seed)).collect();
    let rows = build_bias_report(&corpus, &responses, &groups, &specs, &folds, false).map_err(js_err)?;
    to_json(&rows)
}
