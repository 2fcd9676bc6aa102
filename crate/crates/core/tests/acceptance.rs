//! Acceptance checks. Each prints one PASS / FAIL / SKIPPED line; the
//! process exits nonzero if any check fails.

use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use crowdwise::aggregate::{cv_evaluate, simple_average, AggregatorKind, AggregatorSpec, FittedAggregator};
use crowdwise::crowdsim::{
    calibrate_correlation, generate_corpus, simulate_responses, CrowdSpec, SyntheticResponderSpec,
};
use crowdwise::dataset::{
    load_corpus, load_profiles, load_responses, make_folds, Category, Corpus, FileFormat, Group, LikelihoodScale,
    ResponseMatrix, Sentiment, Status,
};
use crowdwise::elicit::{parse_response, render_prompt, ParsedResponse, PromptTemplate};
use crowdwise::harness::{
    build_bias_report, run_size_sweep, run_sweep, GroupType, Pools, ReportGroup, RunConfig, SweepConfig,
};
use crowdwise::metrics::{
    accuracy_row, counterfactual_bias_row, framing_effect_row, mann_whitney_u, q_statistic, wilcoxon_signed_rank,
    MetricsError, SubsetSelector, TestVariant, ZeroHandling,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

enum Outcome {
    Pass(String),
    Fail(String),
    Skipped(String),
}

fn verdict(ok: bool, detail: String) -> Outcome {
    if ok {
        Outcome::Pass(detail)
    } else {
        Outcome::Fail(detail)
    }
}

const LEVELS: [f64; 5] = [0.0, 0.25, 0.5, 0.75, 1.0];

/// Nondecreasing sequences of `k` level indices.
fn multisets(k: usize, alphabet: usize) -> Vec<Vec<usize>> {
    fn rec(k: usize, from: usize, alphabet: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for v in from..alphabet {
            cur.push(v);
            rec(k, v, alphabet, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(k, 0, alphabet, &mut Vec::new(), &mut out);
    out
}

fn two_sided(le: f64, ge: f64) -> f64 {
    (2.0 * le.min(ge)).min(1.0)
}

/// U counted pair by pair, with half credit for ties.
fn u_by_pairs(x: &[f64], y: &[f64]) -> f64 {
    let mut u = 0.0;
    for &a in x {
        for &b in y {
            u += if a > b {
                1.0
            } else if a == b {
                0.5
            } else {
                0.0
            };
        }
    }
    u
}

/// Two-sided p from every assignment of the pooled values to the first sample.
fn mwu_oracle(x: &[f64], y: &[f64]) -> f64 {
    let pooled: Vec<f64> = x.iter().chain(y).copied().collect();
    let n = pooled.len();
    let observed = u_by_pairs(x, y);
    let (mut le, mut ge, mut total) = (0u64, 0u64, 0u64);
    for mask in 0u32..(1 << n) {
        if mask.count_ones() as usize != x.len() {
            continue;
        }
        let mut u = 0.0;
        for i in (0..n).filter(|&i| mask >> i & 1 == 1) {
            for j in (0..n).filter(|&j| mask >> j & 1 == 0) {
                u += if pooled[i] > pooled[j] {
                    1.0
                } else if pooled[i] == pooled[j] {
                    0.5
                } else {
                    0.0
                };
            }
        }
        total += 1;
        le += (u <= observed) as u64;
        ge += (u >= observed) as u64;
    }
    two_sided(le as f64 / total as f64, ge as f64 / total as f64)
}

/// Signed-rank p from every sign pattern over the nonzero differences, with
/// midranks counted directly.
fn wilcoxon_oracle(d: &[f64]) -> Option<f64> {
    let abs: Vec<f64> = d.iter().filter(|&&v| v != 0.0).map(|v| v.abs()).collect();
    if abs.is_empty() {
        return None;
    }
    let rank = |v: f64| {
        let below = abs.iter().filter(|&&w| w < v).count() as f64;
        let equal = abs.iter().filter(|&&w| w == v).count() as f64;
        below + (equal + 1.0) / 2.0
    };
    let ranks: Vec<f64> = abs.iter().map(|&v| rank(v)).collect();
    let signs: Vec<bool> = d.iter().filter(|&&v| v != 0.0).map(|&v| v > 0.0).collect();
    let observed: f64 = ranks.iter().zip(&signs).filter(|(_, &s)| s).map(|(r, _)| r).sum();
    let m = ranks.len();
    let (mut le, mut ge) = (0u64, 0u64);
    for mask in 0u32..(1 << m) {
        let w: f64 = (0..m).filter(|&i| mask >> i & 1 == 1).map(|i| ranks[i]).sum();
        le += (w <= observed + 1e-9) as u64;
        ge += (w >= observed - 1e-9) as u64;
    }
    let total = (1u64 << m) as f64;
    Some(two_sided(le as f64 / total, ge as f64 / total))
}

fn criterion_1() -> Outcome {
    let mut cases = 0usize;
    let mut worst = 0.0f64;
    let mut bad = None;
    let sets: Vec<Vec<Vec<usize>>> = (0..=9).map(|k| multisets(k, 5)).collect();
    for nx in 1..=9 {
        for ny in 1..=(10 - nx) {
            for xs in &sets[nx] {
                let x: Vec<f64> = xs.iter().map(|&i| LEVELS[i]).collect();
                for ys in &sets[ny] {
                    let y: Vec<f64> = ys.iter().map(|&i| LEVELS[i]).collect();
                    let got = mann_whitney_u(&x, &y).expect("nonempty").p_value;
                    let err = (got - mwu_oracle(&x, &y)).abs();
                    cases += 1;
                    if err > worst {
                        worst = err;
                        bad = Some(format!("MWU x={x:?} y={y:?}"));
                    }
                }
            }
        }
    }
    // paired samples: n pairs use 2n values, so n <= 5
    for n in 1..=5 {
        for pairs in multisets(n, 25) {
            let d: Vec<f64> = pairs.iter().map(|&p| LEVELS[p / 5] - LEVELS[p % 5]).collect();
            cases += 1;
            match (wilcoxon_signed_rank(&d), wilcoxon_oracle(&d)) {
                (Ok(w), Some(p)) => {
                    let err = (w.p_value - p).abs();
                    if err > worst {
                        worst = err;
                        bad = Some(format!("Wilcoxon d={d:?}"));
                    }
                }
                (Err(MetricsError::AllZero), None) => {}
                _ => {
                    worst = f64::INFINITY;
                    bad = Some(format!("Wilcoxon error mismatch d={d:?}"));
                }
            }
        }
    }
    let detail = format!("{cases} cases, max |p - oracle| = {worst:.1e}");
    verdict(
        worst <= 1e-12 && cases >= 1000,
        match bad.filter(|_| worst > 1e-12) {
            Some(b) => format!("{detail}; worst at {b}"),
            None => detail,
        },
    )
}

fn criterion_2() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut mismatches = 0;
    let mut degenerate = 0;
    for _ in 0..10_000 {
        let len = rng.gen_range(4..=60);
        // skew some pairs toward all-agree or all-correct to hit degenerate tables
        let bias = [0.5, 0.9, 0.98][rng.gen_range(0..3)];
        let a: Vec<bool> = (0..len).map(|_| rng.gen_bool(bias)).collect();
        let b: Vec<bool> = (0..len).map(|_| rng.gen_bool(bias)).collect();
        let (mut n11, mut n00, mut n10, mut n01) = (0i64, 0i64, 0i64, 0i64);
        for (&x, &y) in a.iter().zip(&b) {
            match (x, y) {
                (true, true) => n11 += 1,
                (false, false) => n00 += 1,
                (true, false) => n10 += 1,
                (false, true) => n01 += 1,
            }
        }
        let denom = n11 * n00 + n01 * n10;
        let ok = match q_statistic(&a, &b) {
            Ok(q) => denom != 0 && q == (n11 * n00 - n01 * n10) as f64 / denom as f64 && q.abs() <= 1.0,
            Err(MetricsError::DegenerateTable) => {
                degenerate += 1;
                denom == 0
            }
            Err(_) => false,
        };
        mismatches += usize::from(!ok);
    }
    verdict(
        mismatches == 0,
        format!("10000 pairs, {mismatches} mismatches, {degenerate} degenerate tables"),
    )
}

fn crowd_average(m: &ResponseMatrix, n: usize) -> Vec<Option<f64>> {
    (0..n)
        .map(|i| simple_average(&(0..m.responders().len()).map(|r| m.row_at(r)[i]).collect::<Vec<_>>()).ok())
        .collect()
}

fn criterion_3() -> Outcome {
    const SEEDS: u64 = 50;
    let mut worst_hits = usize::MAX;
    let mut details = Vec::new();
    for beta in [0.0, 0.1, 0.25] {
        let mut hits = 0;
        let mut framing_hits = 0;
        for seed in 0..SEEDS {
            let corpus = generate_corpus(200, seed).expect("corpus");
            let spec = SyntheticResponderSpec::with_accuracy(0.65).bias(Category::Ethnicity, beta);
            let m = simulate_responses(&CrowdSpec::homogeneous(spec, 10, seed), &corpus, seed + 1000).expect("sim");
            let avg = crowd_average(&m, corpus.len());
            let bias_ok = Status::ALL.iter().all(|&status| {
                let b = counterfactual_bias_row(
                    &corpus,
                    &avg,
                    status,
                    Sentiment::Positive,
                    Group::White,
                    Group::AfricanAmerican,
                    TestVariant::Auto,
                )
                .expect("bias");
                (b.delta - beta).abs() <= 0.05
            });
            hits += usize::from(bias_ok);
            let framing_ok = Group::ALL.iter().all(|&g| {
                Sentiment::ALL.iter().all(|&s| {
                    let f = framing_effect_row(&corpus, &avg, s, g, ZeroHandling::Discard).expect("framing");
                    f.delta_f.abs() <= 0.05
                })
            });
            framing_hits += usize::from(framing_ok);
        }
        worst_hits = worst_hits.min(hits).min(framing_hits);
        details.push(format!("beta={beta}: delta {hits}/50, zero framing {framing_hits}/50"));
    }
    verdict(worst_hits >= 47, details.join("; "))
}

fn random_instance(seed: u64) -> (Corpus, ResponseMatrix, Vec<String>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let corpus = generate_corpus(rng.gen_range(2..6), seed).expect("corpus");
    let n = rng.gen_range(2..7);
    let members: Vec<_> = (0..n)
        .map(|_| {
            let mut s = SyntheticResponderSpec::with_accuracy(rng.gen_range(0.45..0.9)).rho(rng.gen_range(0.0..0.6));
            if rng.gen_bool(0.5) {
                s = SyntheticResponderSpec::specialist(
                    Category::ALL[rng.gen_range(0..3)],
                    rng.gen_range(0.8..1.0),
                    rng.gen_range(0.4..0.6),
                );
            }
            s
        })
        .collect();
    let crowd = CrowdSpec::new(members, seed);
    let m = simulate_responses(&crowd, &corpus, seed).expect("sim");
    (corpus, m, crowd.member_ids())
}

fn criterion_4() -> Outcome {
    let mut equal = 0;
    for seed in 0..20 {
        let (corpus, m, ids) = random_instance(seed);
        let folds = make_folds(&corpus, 5, seed).expect("folds");
        let flat = cv_evaluate(&AggregatorSpec::new(AggregatorKind::WeightedAverage), &corpus, &m, &ids, &folds);
        let mut tree_spec = AggregatorSpec::new(AggregatorKind::ExpertiseTree).with_seed(seed);
        tree_spec.split_threshold = f64::INFINITY;
        let tree = cv_evaluate(&tree_spec, &corpus, &m, &ids, &folds);
        if let (Ok(a), Ok(b)) = (flat, tree) {
            equal += usize::from(a.predictions == b.predictions);
        }
    }
    verdict(equal == 20, format!("{equal}/20 instances bit-identical"))
}

struct SpecialistTally {
    ordered: usize,
    tree_over_weighted: usize,
    weighted_over_simple: usize,
    split: usize,
}

fn specialist_tally(distractors: usize, pairs_per_cell: usize) -> SpecialistTally {
    let mut t = SpecialistTally {
        ordered: 0,
        tree_over_weighted: 0,
        weighted_over_simple: 0,
        split: 0,
    };
    for seed in 0..50u64 {
        let corpus = generate_corpus(pairs_per_cell, seed).expect("corpus");
        let mut members: Vec<_> = Category::ALL
            .iter()
            .map(|&c| SyntheticResponderSpec::specialist(c, 0.95, 0.5))
            .collect();
        members.extend((0..distractors).map(|_| SyntheticResponderSpec::with_accuracy(0.5)));
        let crowd = CrowdSpec::new(members, seed);
        let m = simulate_responses(&crowd, &corpus, seed + 77).expect("sim");
        let ids = crowd.member_ids();
        let folds = make_folds(&corpus, 5, seed).expect("folds");
        let mut acc = Vec::new();
        let mut splits_everywhere = false;
        for kind in AggregatorKind::ALL {
            let out = cv_evaluate(&AggregatorSpec::new(kind).with_seed(seed), &corpus, &m, &ids, &folds).expect("cv");
            acc.push(accuracy_row(&corpus, &out.predictions, &SubsetSelector::all()).expect("acc"));
            if kind == AggregatorKind::ExpertiseTree {
                splits_everywhere = out
                    .models
                    .iter()
                    .all(|f| matches!(f, FittedAggregator::ExpertiseTree { tree } if tree.split_count() > 0));
            }
        }
        let (simple, weighted, tree) = (acc[0], acc[1], acc[2]);
        t.ordered += usize::from(tree > weighted && weighted > simple);
        t.tree_over_weighted += usize::from(tree > weighted);
        t.weighted_over_simple += usize::from(weighted > simple);
        t.split += usize::from(splits_everywhere);
    }
    t
}

// 13 pairs per cell gives 104 headlines per category, the closest balanced
// size to 100.
const SPECIALIST_PAIRS_PER_CELL: usize = 13;

fn criterion_5() -> Outcome {
    let t = specialist_tally(0, SPECIALIST_PAIRS_PER_CELL);
    verdict(
        t.ordered >= 45 && t.split >= 45,
        format!(
            "tree > weighted > simple in {}/50 (tree > weighted {}/50, weighted > simple {}/50); category split in every fold {}/50",
            t.ordered, t.tree_over_weighted, t.weighted_over_simple, t.split
        ),
    )
}

/// Same crowd plus two coin-flip responders; reported for context, not scored.
fn specialist_with_distractors() -> String {
    let t = specialist_tally(2, SPECIALIST_PAIRS_PER_CELL);
    format!(
        "with 2 uninformative members: ordering {}/50 (tree > weighted {}/50, weighted > simple {}/50), split {}/50",
        t.ordered, t.tree_over_weighted, t.weighted_over_simple, t.split
    )
}

fn criterion_6() -> Outcome {
    let base = SyntheticResponderSpec::with_accuracy(0.61);
    let (rho_low_div, rho_high_div) = match (
        calibrate_correlation(0.855, &base, 10, 1),
        calibrate_correlation(0.387, &base, 10, 1),
    ) {
        (Ok(a), Ok(b)) => (a, b),
        (a, b) => return Outcome::Fail(format!("calibration failed: {:?} {:?}", a.err(), b.err())),
    };
    let mut gains = [0.0f64; 2];
    let mut per_seed = 0;
    for seed in 0..50u64 {
        let corpus = generate_corpus(25, seed).expect("corpus");
        let folds = make_folds(&corpus, 5, seed).expect("folds");
        let mut g = [0.0; 2];
        for (k, rho) in [rho_low_div, rho_high_div].into_iter().enumerate() {
            let crowd = CrowdSpec::homogeneous(base.clone().rho(rho), 16, seed);
            let m = simulate_responses(&crowd, &corpus, seed + 500).expect("sim");
            let profiles: Vec<_> = crowd
                .member_ids()
                .into_iter()
                .map(|id| crowdwise::dataset::ResponderProfile::new(id, crowdwise::dataset::ResponderKind::Synthetic, None))
                .collect();
            let config = SweepConfig {
                group_types: vec![GroupType::Synthetic],
                sizes: vec![2, 16],
                repeats: 20,
                aggregators: vec![AggregatorSpec::new(AggregatorKind::SimpleAverage)],
                seed,
                bootstrap_resamples: 0,
                ..Default::default()
            };
            let cells = run_size_sweep(&corpus, &m, &Pools::from_profiles(&profiles), &config, &folds).expect("sweep");
            g[k] = cells[1].mean_accuracy - cells[0].mean_accuracy;
        }
        per_seed += usize::from(g[0] < 0.5 * g[1]);
        gains[0] += g[0] / 50.0;
        gains[1] += g[1] / 50.0;
    }
    verdict(
        gains[0] < 0.5 * gains[1],
        format!(
            "rho {rho_low_div:.3} / {rho_high_div:.3}; mean gain 2->16: low diversity {:.4}, high diversity {:.4} (per-seed {per_seed}/50)",
            gains[0], gains[1]
        ),
    )
}

fn fixtures() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures")
}

#[derive(serde::Deserialize)]
struct PromptCase {
    target_str: String,
    query: String,
    examples: Vec<String>,
    golden: String,
}

#[derive(serde::Deserialize)]
struct ParserCase {
    raw: String,
    expected: Option<u8>,
}

fn criterion_7() -> Outcome {
    let corpus = load_corpus(fixtures().join("prompt_corpus.csv"), FileFormat::Csv).expect("fixture corpus");
    let cases: Vec<PromptCase> =
        serde_json::from_str(&std::fs::read_to_string(fixtures().join("prompts/cases.json")).expect("cases"))
            .expect("cases parse");
    let mut prompt_ok = 0;
    for case in &cases {
        let template = PromptTemplate::new(case.target_str.clone());
        let query = corpus.get(&case.query).expect("query");
        let examples: Vec<_> = case.examples.iter().map(|id| corpus.get(id).expect("example")).collect();
        let labels: Vec<u8> = examples.iter().map(|h| template.expected_label(h)).collect();
        let rendered = render_prompt(&template, query, &examples, &labels).expect("render");
        let golden = std::fs::read(fixtures().join("prompts").join(&case.golden)).expect("golden");
        prompt_ok += usize::from(rendered.as_bytes() == golden.as_slice());
    }
    let parser: Vec<ParserCase> =
        serde_json::from_str(&std::fs::read_to_string(fixtures().join("parser_cases.json")).expect("parser cases"))
            .expect("parser parse");
    let parse_ok = parser
        .iter()
        .filter(|c| parse_response(&c.raw) == c.expected.map_or(ParsedResponse::Refusal, ParsedResponse::Label))
        .count();
    let refusal_case = parser
        .iter()
        .any(|c| c.expected.is_none() && parse_response(&c.raw) == ParsedResponse::Refusal);
    verdict(
        prompt_ok == cases.len() && parse_ok == parser.len() && parser.len() == 30 && refusal_case,
        format!("{prompt_ok}/{} golden prompts, {parse_ok}/{} parser cases", cases.len(), parser.len()),
    )
}

/// Expects `corpus.csv`, `responses.csv` and `profiles.csv` in the directory
/// named by `CROWDWISE_STUDY_DATA`.
fn criterion_8() -> Outcome {
    let Some(dir) = std::env::var_os("CROWDWISE_STUDY_DATA").map(PathBuf::from) else {
        return Outcome::Skipped("CROWDWISE_STUDY_DATA not set".into());
    };
    let load = || -> Result<_, crowdwise::Error> {
        let corpus = load_corpus(dir.join("corpus.csv"), FileFormat::Csv)?;
        let responses = load_responses(dir.join("responses.csv"), &corpus, LikelihoodScale::Likert)?;
        let profiles = load_profiles(dir.join("profiles.csv"))?;
        Ok((corpus, responses, profiles))
    };
    let (corpus, responses, profiles) = match load() {
        Ok(v) => v,
        Err(e) => return Outcome::Fail(format!("could not load study data: {e}")),
    };
    let pools = Pools::from_profiles(&profiles);
    let groups = [
        ReportGroup {
            label: "human".into(),
            members: pools.members(GroupType::Human),
        },
        ReportGroup {
            label: "LLM".into(),
            members: pools.members(GroupType::Llm),
        },
    ];
    let folds = match make_folds(&corpus, 5, 0) {
        Ok(f) => f,
        Err(e) => return Outcome::Fail(e.to_string()),
    };
    let spec = [AggregatorSpec::new(AggregatorKind::SimpleAverage)];
    let rows = match build_bias_report(&corpus, &responses, &groups, &spec, &folds, false) {
        Ok(r) => r,
        Err(e) => return Outcome::Fail(e.to_string()),
    };
    let human = rows[0].overall_accuracy.unwrap_or(f64::NAN);
    let llm = rows[1].overall_accuracy.unwrap_or(f64::NAN);
    let delta = rows[0]
        .cells
        .iter()
        .find(|c| c.category == Category::Ethnicity && c.status == Status::Genuine)
        .and_then(|c| c.delta)
        .unwrap_or(f64::NAN);
    verdict(
        (human - 0.550).abs() <= 0.005 && (llm - 0.652).abs() <= 0.005 && (delta - 0.17).abs() <= 0.01,
        format!("human {human:.3}, average(LLM) {llm:.3}, human ethnicity-genuine delta {delta:+.3}"),
    )
}

const SWEEP_CONFIG: &str = r#"
seed = 2024
folds = 5

[simulate]
pairs_per_cell = 5

[[simulate.members]]
kind = "llm"
count = 16
base_accuracy = 0.65
correlation_rho = 0.5
benchmark_score = 70.0

[[simulate.members]]
kind = "human"
count = 16
base_accuracy = 0.55
correlation_rho = 0.1

[sweep]
repeats = 10
bootstrap_resamples = 2000
"#;

fn dir_bytes(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<_> = std::fs::read_dir(dir)
        .expect("out dir")
        .map(|e| e.expect("entry").path())
        .map(|p| (p.file_name().unwrap().to_string_lossy().into_owned(), std::fs::read(&p).expect("read")))
        .collect();
    files.sort();
    files
}

fn criterion_9() -> Outcome {
    let tmp = tempfile::tempdir().expect("tempdir");
    let mut config = RunConfig::parse(SWEEP_CONFIG, tmp.path()).expect("config");
    let mut runs = Vec::new();
    for out in ["a", "b"] {
        config.out_dir = out.into();
        if let Err(e) = run_sweep(&config) {
            return Outcome::Fail(format!("sweep failed: {e}"));
        }
        runs.push(dir_bytes(&tmp.path().join(out)));
    }
    let bytes: usize = runs[0].iter().map(|(_, b)| b.len()).sum();
    verdict(
        runs[0] == runs[1] && !runs[0].is_empty(),
        format!("{} files, {bytes} bytes, identical: {}", runs[0].len(), runs[0] == runs[1]),
    )
}

type Check = (&'static str, &'static str, Option<Duration>, fn() -> Outcome);

fn main() {
    let checks: [Check; 9] = [
        ("1", "statistical-test exactness", Some(Duration::from_secs(10)), criterion_1),
        ("2", "Q-statistic oracle equivalence", None, criterion_2),
        ("3", "planted-bias recovery", Some(Duration::from_secs(60)), criterion_3),
        ("4", "tree-collapse identity", None, criterion_4),
        ("5", "specialist recovery", Some(Duration::from_secs(300)), criterion_5),
        ("6", "diversity plateau", Some(Duration::from_secs(300)), criterion_6),
        ("7", "prompt fidelity", None, criterion_7),
        ("8", "dataset replication", None, criterion_8),
        ("9", "end-to-end determinism", None, criterion_9),
    ];
    let mut failed = 0;
    for (id, name, budget, check) in checks {
        let start = Instant::now();
        let outcome = check();
        let took = start.elapsed();
        let over = budget.filter(|b| took > *b);
        let (tag, detail) = match outcome {
            Outcome::Pass(d) if over.is_none() => ("PASS", d),
            Outcome::Pass(d) => ("FAIL", format!("{d}; over time budget {:?}", over.unwrap())),
            Outcome::Fail(d) => ("FAIL", d),
            Outcome::Skipped(d) => ("SKIPPED", d),
        };
        failed += usize::from(tag == "FAIL");
        println!("[{tag}] criterion {id} {name}: {detail} ({:.2}s)", took.as_secs_f64());
        if id == "5" {
            println!("[INFO] criterion 5 variant: {}", specialist_with_distractors());
        }
    }
    if failed > 0 {
        println!("{failed} criterion(s) failed");
        std::process::exit(1);
    }
}
