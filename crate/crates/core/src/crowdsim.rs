//! Synthetic corpora and crowds with planted accuracy, counterfactual bias,
//! framing effects and inter-responder correlation.
//!
//! Each (member, headline) answer is driven by one uniform draw `u`. With
//! probability `correlation_rho` the member adopts the crowd's shared draw for
//! that headline, otherwise it uses a private one. The draw is mapped through
//! the member's emission distribution, ordered from confidently correct to
//! confidently wrong, so members sharing a draw make the same kind of error.

use std::collections::BTreeMap;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::dataset::{
    Category, CellKey, Corpus, DatasetError, Group, Headline, LikelihoodScale, ResponseMatrix, Sentiment, Status,
};
use crate::metrics::{mean_pairwise_q, q_matrix};
use crate::rng::{derive_seed, rng_from};

#[derive(Debug, thiserror::Error)]
pub enum CrowdsimError {
    #[error("invalid spec: {0}")]
    InvalidSpec(String),
    #[error("target Q {target} is outside the simulable range [{min:.3}, {max:.3}]")]
    Unachievable { target: f64, min: f64, max: f64 },
    #[error(transparent)]
    Dataset(#[from] DatasetError),
}

pub const DEFAULT_HESITATION: f64 = 0.1;

/// Accuracy override for one (category, status, sentiment, group) cell.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CellAccuracy {
    #[serde(flatten)]
    pub cell: CellKey,
    pub accuracy: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FramingShift {
    pub category: Category,
    pub sentiment: Sentiment,
    pub shift: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SyntheticResponderSpec {
    /// Responder id; generated from the member position when empty.
    pub id: String,
    pub base_accuracy: f64,
    pub per_cell_accuracy: Vec<CellAccuracy>,
    /// Planted Δ per category: the privileged group's mean likelihood minus the
    /// other group's on positive headlines (reversed on negative ones).
    pub bias_shift: BTreeMap<Category, f64>,
    /// Planted Δ_F per (category, sentiment).
    pub framing_shift: Vec<FramingShift>,
    pub correlation_rho: f64,
    /// Rate of 0.5 answers at accuracy 0.5; scaled by `2 min(a, 1 - a)` so
    /// that measured accuracy equals the planted one.
    pub hesitation: f64,
}

impl Default for SyntheticResponderSpec {
    fn default() -> Self {
        SyntheticResponderSpec {
            id: String::new(),
            base_accuracy: 0.5,
            per_cell_accuracy: Vec::new(),
            bias_shift: BTreeMap::new(),
            framing_shift: Vec::new(),
            correlation_rho: 0.0,
            hesitation: DEFAULT_HESITATION,
        }
    }
}

impl SyntheticResponderSpec {
    pub fn with_accuracy(base_accuracy: f64) -> Self {
        SyntheticResponderSpec {
            base_accuracy,
            ..Default::default()
        }
    }

    /// Accurate in one category, at `elsewhere` in the other two.
    pub fn specialist(category: Category, accuracy: f64, elsewhere: f64) -> Self {
        let per_cell_accuracy = CellKey::all()
            .into_iter()
            .map(|cell| CellAccuracy {
                cell,
                accuracy: if cell.category == category { accuracy } else { elsewhere },
            })
            .collect();
        SyntheticResponderSpec {
            base_accuracy: elsewhere,
            per_cell_accuracy,
            ..Default::default()
        }
    }

    pub fn rho(mut self, rho: f64) -> Self {
        self.correlation_rho = rho;
        self
    }

    pub fn bias(mut self, category: Category, shift: f64) -> Self {
        self.bias_shift.insert(category, shift);
        self
    }

    pub fn framing(mut self, category: Category, sentiment: Sentiment, shift: f64) -> Self {
        self.framing_shift.retain(|f| (f.category, f.sentiment) != (category, sentiment));
        self.framing_shift.push(FramingShift {
            category,
            sentiment,
            shift,
        });
        self
    }

    pub fn named(mut self, id: impl Into<String>) -> Self {
        self.id = id.into();
        self
    }

    fn validate(&self) -> Result<(), CrowdsimError> {
        let unit = |v: f64| (0.0..=1.0).contains(&v);
        if !unit(self.base_accuracy) {
            return Err(CrowdsimError::InvalidSpec(format!("base_accuracy {}", self.base_accuracy)));
        }
        if let Some(c) = self.per_cell_accuracy.iter().find(|c| !unit(c.accuracy)) {
            return Err(CrowdsimError::InvalidSpec(format!("accuracy {} in cell {}", c.accuracy, c.cell)));
        }
        if !unit(self.correlation_rho) {
            return Err(CrowdsimError::InvalidSpec(format!("correlation_rho {}", self.correlation_rho)));
        }
        if !unit(self.hesitation) {
            return Err(CrowdsimError::InvalidSpec(format!("hesitation {}", self.hesitation)));
        }
        if let Some((c, b)) = self.bias_shift.iter().find(|(_, b)| !(-1.0..=1.0).contains(*b)) {
            return Err(CrowdsimError::InvalidSpec(format!("bias_shift {b} for {c}")));
        }
        if let Some(f) = self.framing_shift.iter().find(|f| !(-1.0..=1.0).contains(&f.shift)) {
            return Err(CrowdsimError::InvalidSpec(format!("framing_shift {}", f.shift)));
        }
        Ok(())
    }

    /// Cell accuracy after the bias and framing shifts, clamped to [0, 1].
    fn effective_accuracy(&self, h: &Headline) -> f64 {
        let cell = CellKey::of(h);
        let base = self
            .per_cell_accuracy
            .iter()
            .find(|c| c.cell == cell)
            .map_or(self.base_accuracy, |c| c.accuracy);

        // Desired shift of the mean likelihood, split evenly between groups
        // (bias) or between partners (framing).
        let mut shift = 0.0;
        if let Some(&beta) = self.bias_shift.get(&h.category) {
            let favoured = h.group.is_privileged() == (h.sentiment == Sentiment::Positive);
            shift += if favoured { beta / 2.0 } else { -beta / 2.0 };
        }
        if let Some(f) = self
            .framing_shift
            .iter()
            .find(|f| f.category == h.category && f.sentiment == h.sentiment)
        {
            shift += f.shift / 2.0;
        }
        // E[p | genuine] = 0.125 + 0.75 a and E[p | altered] = 0.875 - 0.75 a
        let delta_a = shift / 0.75;
        let a = match h.status {
            Status::Genuine => base + delta_a,
            Status::Altered => base - delta_a,
        };
        a.clamp(0.0, 1.0)
    }
}

/// Maps a uniform draw to a Likert likelihood for a responder of accuracy `a`.
fn emit(u: f64, a: f64, hesitation: f64, status: Status) -> f64 {
    let eta = hesitation * 2.0 * a.min(1.0 - a);
    let correct = a - eta / 2.0;
    let wrong = 1.0 - correct - eta;
    // distance from the truth: 0 strong correct, 1 weak correct, 2 undecided, 3, 4
    let level = if u < correct / 2.0 {
        0
    } else if u < correct {
        1
    } else if u < correct + eta {
        2
    } else if u < correct + eta + wrong / 2.0 {
        3
    } else {
        4
    };
    let towards_genuine = [1.0, 0.75, 0.5, 0.25, 0.0][level];
    match status {
        Status::Genuine => towards_genuine,
        Status::Altered => 1.0 - towards_genuine,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrowdSpec {
    pub members: Vec<SyntheticResponderSpec>,
    pub shared_noise_seed: u64,
}

impl CrowdSpec {
    pub fn new(members: Vec<SyntheticResponderSpec>, shared_noise_seed: u64) -> Self {
        CrowdSpec {
            members,
            shared_noise_seed,
        }
    }

    /// `n` copies of one spec.
    pub fn homogeneous(spec: SyntheticResponderSpec, n: usize, shared_noise_seed: u64) -> Self {
        CrowdSpec::new(vec![spec; n], shared_noise_seed)
    }

    pub fn member_ids(&self) -> Vec<String> {
        self.members
            .iter()
            .enumerate()
            .map(|(i, m)| if m.id.is_empty() { format!("sim{i:02}") } else { m.id.clone() })
            .collect()
    }
}

/// Balanced corpus with `pairs_per_cell` genuine/altered pairs for every
/// (category, sentiment, genuine group), i.e. `24 * pairs_per_cell` headlines.
pub fn generate_corpus(pairs_per_cell: usize, seed: u64) -> Result<Corpus, CrowdsimError> {
    if pairs_per_cell == 0 {
        return Err(CrowdsimError::InvalidSpec("pairs_per_cell must be at least 1".into()));
    }
    let mut pairs: Vec<(Headline, Headline)> = Vec::with_capacity(12 * pairs_per_cell);
    for category in Category::ALL {
        for sentiment in Sentiment::ALL {
            for group in category.groups() {
                for k in 0..pairs_per_cell {
                    let stem = format!("{category}-{sentiment}-{group}-{k:04}");
                    let genuine_id = format!("{stem}-g");
                    let altered_id = format!("{stem}-a");
                    let text = |g: Group| format!("Placeholder {sentiment} headline {k} about {g} people");
                    pairs.push((
                        Headline {
                            id: genuine_id.clone(),
                            text: text(group),
                            category,
                            group,
                            sentiment,
                            status: Status::Genuine,
                            partner_id: altered_id.clone(),
                        },
                        Headline {
                            id: altered_id,
                            text: text(group.complement()),
                            category,
                            group: group.complement(),
                            sentiment,
                            status: Status::Altered,
                            partner_id: genuine_id,
                        },
                    ));
                }
            }
        }
    }
    let mut rng = rng_from(derive_seed(seed, &[0x636f_7270]));
    let mut headlines: Vec<Headline> = pairs.into_iter().flat_map(|(a, b)| [a, b]).collect();
    // Fisher-Yates by hand so the order only depends on this crate's draws
    for i in (1..headlines.len()).rev() {
        let j = rng.gen_range(0..=i);
        headlines.swap(i, j);
    }
    Ok(Corpus::new(
        headlines,
        format!("synthetic corpus, {pairs_per_cell} pairs per cell, seed {seed}"),
    )?)
}

/// Simulates every member on every headline.
pub fn simulate_responses(crowd: &CrowdSpec, corpus: &Corpus, seed: u64) -> Result<ResponseMatrix, CrowdsimError> {
    for m in &crowd.members {
        m.validate()?;
    }
    let mut shared_rng = rng_from(derive_seed(crowd.shared_noise_seed, &[seed]));
    let shared: Vec<f64> = (0..corpus.len()).map(|_| shared_rng.gen::<f64>()).collect();

    let mut matrix = ResponseMatrix::new(corpus, LikelihoodScale::Likert);
    for (i, (spec, id)) in crowd.members.iter().zip(crowd.member_ids()).enumerate() {
        let mut rng = rng_from(derive_seed(seed, &[1, i as u64]));
        let row = corpus
            .headlines()
            .iter()
            .zip(&shared)
            .map(|(h, &u_shared)| {
                // always draw both so streams line up across rho values
                let adopt: f64 = rng.gen();
                let own: f64 = rng.gen();
                let u = if adopt < spec.correlation_rho { u_shared } else { own };
                Some(emit(u, spec.effective_accuracy(h), spec.hesitation, h.status))
            })
            .collect();
        matrix.push_row(id, row)?;
    }
    Ok(matrix)
}

pub const CALIBRATION_SEEDS: u64 = 20;
pub const CALIBRATION_TOLERANCE: f64 = 0.02;
const CALIBRATION_MEMBERS: usize = 4;
const BISECTION_STEPS: usize = 40;

/// Mean pairwise Q of a homogeneous crowd at correlation `rho`, averaged over
/// a fixed set of seeds (common random numbers across `rho`).
pub fn simulated_mean_q(
    spec: &SyntheticResponderSpec,
    rho: f64,
    pairs_per_cell: usize,
    seed: u64,
) -> Result<f64, CrowdsimError> {
    let spec = spec.clone().rho(rho);
    let crowd = CrowdSpec::homogeneous(spec, CALIBRATION_MEMBERS, derive_seed(seed, &[2]));
    let ids = crowd.member_ids();
    let mut total = 0.0;
    for s in 0..CALIBRATION_SEEDS {
        let corpus = generate_corpus(pairs_per_cell, derive_seed(seed, &[3, s]))?;
        let responses = simulate_responses(&crowd, &corpus, derive_seed(seed, &[4, s]))?;
        let q = q_matrix(&responses, &corpus, &ids).map_err(|e| CrowdsimError::InvalidSpec(e.to_string()))?;
        total += mean_pairwise_q(&q)
            .ok_or_else(|| CrowdsimError::InvalidSpec("every responder pair has a degenerate table".into()))?;
    }
    Ok(total / CALIBRATION_SEEDS as f64)
}

/// Finds the shared-noise probability giving mean pairwise Q near `target_q`
/// for a crowd of copies of `member_spec`. `pairs_per_cell` sizes the
/// calibration corpora.
pub fn calibrate_correlation(
    target_q: f64,
    member_spec: &SyntheticResponderSpec,
    pairs_per_cell: usize,
    seed: u64,
) -> Result<f64, CrowdsimError> {
    member_spec.validate()?;
    if !(-1.0..=1.0).contains(&target_q) {
        return Err(CrowdsimError::InvalidSpec(format!("target Q {target_q}")));
    }
    let q_at = |rho: f64| simulated_mean_q(member_spec, rho, pairs_per_cell, seed);
    let (lo_q, hi_q) = (q_at(0.0)?, q_at(1.0)?);
    let unachievable = || CrowdsimError::Unachievable {
        target: target_q,
        min: lo_q,
        max: hi_q,
    };
    if (hi_q - target_q).abs() <= CALIBRATION_TOLERANCE && target_q >= hi_q - 1e-12 {
        return Ok(1.0);
    }
    if target_q < lo_q - CALIBRATION_TOLERANCE || target_q > hi_q + CALIBRATION_TOLERANCE {
        return Err(unachievable());
    }
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    let mut best = if (lo_q - target_q).abs() <= (hi_q - target_q).abs() { (0.0, lo_q) } else { (1.0, hi_q) };
    for _ in 0..BISECTION_STEPS {
        let mid = 0.5 * (lo + hi);
        let q = q_at(mid)?;
        if (q - target_q).abs() < (best.1 - target_q).abs() {
            best = (mid, q);
        }
        if (q - target_q).abs() <= CALIBRATION_TOLERANCE / 4.0 {
            break;
        }
        if q < target_q {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    if (best.1 - target_q).abs() <= CALIBRATION_TOLERANCE {
        Ok(best.0)
    } else {
        Err(unachievable())
    }
}
