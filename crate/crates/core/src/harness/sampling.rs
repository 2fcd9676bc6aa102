use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::HarnessError;
use crate::dataset::{ResponderKind, ResponderProfile};
use crate::rng::rng_from;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PolicyKind {
    Random,
    BenchmarkTop,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SamplingPolicy {
    pub kind: PolicyKind,
    pub seed: u64,
}

impl SamplingPolicy {
    pub fn random(seed: u64) -> Self {
        SamplingPolicy {
            kind: PolicyKind::Random,
            seed,
        }
    }

    pub fn benchmark_top() -> Self {
        SamplingPolicy {
            kind: PolicyKind::BenchmarkTop,
            seed: 0,
        }
    }
}

/// Draws `size` members from `pool`. Random draws are uniform without
/// replacement; benchmark-top takes the highest scores, ties by id.
pub fn sample_group(pool: &[ResponderProfile], size: usize, policy: SamplingPolicy) -> Result<Vec<String>, HarnessError> {
    if size > pool.len() {
        return Err(HarnessError::PoolTooSmall {
            requested: size,
            available: pool.len(),
        });
    }
    match policy.kind {
        PolicyKind::Random => {
            let mut ids: Vec<&str> = pool.iter().map(|p| p.id.as_str()).collect();
            let mut rng = rng_from(policy.seed);
            let (chosen, _) = ids.partial_shuffle(&mut rng, size);
            Ok(chosen.iter().map(|s| s.to_string()).collect())
        }
        PolicyKind::BenchmarkTop => {
            let mut scored = pool
                .iter()
                .map(|p| {
                    p.benchmark_score
                        .map(|s| (s, p.id.as_str()))
                        .ok_or_else(|| HarnessError::MissingScores(p.id.clone()))
                })
                .collect::<Result<Vec<_>, _>>()?;
            scored.sort_by(|a, b| b.0.total_cmp(&a.0).then_with(|| a.1.cmp(b.1)));
            Ok(scored.into_iter().take(size).map(|(_, id)| id.to_string()).collect())
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HybridSpec {
    pub llm_fraction: f64,
    pub llm_policy: SamplingPolicy,
    pub human_policy: SamplingPolicy,
}

pub const DEFAULT_LLM_FRACTION: f64 = 0.5;

impl HybridSpec {
    pub fn new(llm_fraction: f64, llm_policy: SamplingPolicy, human_policy: SamplingPolicy) -> Self {
        HybridSpec {
            llm_fraction,
            llm_policy,
            human_policy,
        }
    }

    /// LLM share of a group, rounded half up.
    pub fn llm_count(&self, size: usize) -> usize {
        ((size as f64 * self.llm_fraction + 0.5).floor() as usize).min(size)
    }
}

pub fn compose_hybrid(
    llm_pool: &[ResponderProfile],
    human_pool: &[ResponderProfile],
    size: usize,
    spec: &HybridSpec,
) -> Result<Vec<String>, HarnessError> {
    if !(0.0..=1.0).contains(&spec.llm_fraction) {
        return Err(HarnessError::Config(format!("llm_fraction {}", spec.llm_fraction)));
    }
    let n_llm = spec.llm_count(size);
    let mut group = sample_group(llm_pool, n_llm, spec.llm_policy)?;
    group.extend(sample_group(human_pool, size - n_llm, spec.human_policy)?);
    Ok(group)
}

/// Group compositions compared in reports and sweeps.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum GroupType {
    #[serde(rename = "LLM")]
    Llm,
    #[serde(rename = "LLM+")]
    LlmPlus,
    #[serde(rename = "human")]
    Human,
    #[serde(rename = "hybrid")]
    Hybrid,
    #[serde(rename = "hybrid+")]
    HybridPlus,
    #[serde(rename = "synthetic")]
    Synthetic,
}

impl GroupType {
    pub const ALL: [GroupType; 6] = [
        GroupType::Llm,
        GroupType::LlmPlus,
        GroupType::Human,
        GroupType::Hybrid,
        GroupType::HybridPlus,
        GroupType::Synthetic,
    ];

    pub fn label(self) -> &'static str {
        match self {
            GroupType::Llm => "LLM",
            GroupType::LlmPlus => "LLM+",
            GroupType::Human => "human",
            GroupType::Hybrid => "hybrid",
            GroupType::HybridPlus => "hybrid+",
            GroupType::Synthetic => "synthetic",
        }
    }
}

impl fmt::Display for GroupType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for GroupType {
    type Err = HarnessError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        GroupType::ALL
            .into_iter()
            .find(|g| g.label().eq_ignore_ascii_case(s))
            .ok_or_else(|| HarnessError::Config(format!("unknown group type `{s}`")))
    }
}

/// Responder pools split by kind.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Pools {
    pub llm: Vec<ResponderProfile>,
    pub human: Vec<ResponderProfile>,
    pub synthetic: Vec<ResponderProfile>,
}

impl Pools {
    pub fn from_profiles(profiles: &[ResponderProfile]) -> Self {
        let mut pools = Pools::default();
        for p in profiles {
            match p.kind {
                ResponderKind::Llm => pools.llm.push(p.clone()),
                ResponderKind::Human => pools.human.push(p.clone()),
                ResponderKind::Synthetic => pools.synthetic.push(p.clone()),
            }
        }
        pools
    }

    /// Every responder a group of this type may draw from.
    pub fn members(&self, group: GroupType) -> Vec<String> {
        let ids = |v: &[ResponderProfile]| v.iter().map(|p| p.id.clone()).collect::<Vec<_>>();
        match group {
            GroupType::Llm | GroupType::LlmPlus => ids(&self.llm),
            GroupType::Human => ids(&self.human),
            GroupType::Synthetic => ids(&self.synthetic),
            GroupType::Hybrid | GroupType::HybridPlus => {
                let mut all = ids(&self.llm);
                all.extend(ids(&self.human));
                all
            }
        }
    }

    /// Samples one group of `size`; `seed` drives every random choice.
    pub fn sample(&self, group: GroupType, size: usize, llm_fraction: f64, seed: u64) -> Result<Vec<String>, HarnessError> {
        let random = SamplingPolicy::random(seed);
        let human_random = SamplingPolicy::random(crate::rng::derive_seed(seed, &[1]));
        match group {
            GroupType::Llm => sample_group(&self.llm, size, random),
            GroupType::LlmPlus => sample_group(&self.llm, size, SamplingPolicy::benchmark_top()),
            GroupType::Human => sample_group(&self.human, size, random),
            GroupType::Synthetic => sample_group(&self.synthetic, size, random),
            GroupType::Hybrid => compose_hybrid(
                &self.llm,
                &self.human,
                size,
                &HybridSpec::new(llm_fraction, random, human_random),
            ),
            GroupType::HybridPlus => compose_hybrid(
                &self.llm,
                &self.human,
                size,
                &HybridSpec::new(llm_fraction, SamplingPolicy::benchmark_top(), human_random),
            ),
        }
    }
}
