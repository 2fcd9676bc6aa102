use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::report::{build_bias_report, build_q_matrix, emit_report, ExperimentReport, Provenance, ReportGroup};
use super::sampling::{GroupType, Pools, DEFAULT_LLM_FRACTION};
use super::sweep::{run_size_sweep, SweepConfig, DEFAULT_BOOTSTRAP_RESAMPLES, DEFAULT_CONFIDENCE, DEFAULT_REPEATS};
use super::HarnessError;
use crate::aggregate::{AggregatorKind, AggregatorSpec};
use crate::crowdsim::{generate_corpus, simulate_responses, CrowdSpec, SyntheticResponderSpec};
use crate::dataset::{
    corpus_to_string, load_corpus, load_profiles, load_responses, make_folds, profiles_to_string,
    responses_to_string, Corpus, FileFormat, FoldAssignment, LikelihoodScale, ResponderKind, ResponderProfile,
    ResponseMatrix,
};
use crate::elicit::{elicit_all, ChatEndpoint, ElicitationConfig, DEFAULT_TARGET};
use crate::rng::derive_seed;

/// Either a bare aggregator name or a full spec table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum AggregatorEntry {
    Name(AggregatorKind),
    Spec(AggregatorSpec),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DataSection {
    pub corpus: Option<PathBuf>,
    pub responses: Vec<PathBuf>,
    pub profiles: Option<PathBuf>,
    pub scale: LikelihoodScale,
}

impl Default for DataSection {
    fn default() -> Self {
        DataSection {
            corpus: None,
            responses: Vec::new(),
            profiles: None,
            scale: LikelihoodScale::Likert,
        }
    }
}

/// One simulated responder (or `count` identical ones) with its pool kind.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SimulatedMember {
    #[serde(flatten)]
    pub spec: SyntheticResponderSpec,
    pub kind: ResponderKind,
    pub benchmark_score: Option<f64>,
    pub count: usize,
}

impl Default for SimulatedMember {
    fn default() -> Self {
        SimulatedMember {
            spec: SyntheticResponderSpec::default(),
            kind: ResponderKind::Synthetic,
            benchmark_score: None,
            count: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimulateSection {
    pub pairs_per_cell: usize,
    /// Defaults to a seed derived from the run seed.
    pub shared_noise_seed: Option<u64>,
    pub members: Vec<SimulatedMember>,
}

impl Default for SimulateSection {
    fn default() -> Self {
        SimulateSection {
            pairs_per_cell: 25,
            shared_noise_seed: None,
            members: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepSection {
    /// Empty means every group type the pools can form.
    pub group_types: Vec<GroupType>,
    pub sizes: Vec<usize>,
    pub repeats: usize,
    pub llm_fraction: f64,
    pub bootstrap_resamples: usize,
    pub confidence: f64,
}

impl Default for SweepSection {
    fn default() -> Self {
        SweepSection {
            group_types: Vec::new(),
            sizes: (2..=16).collect(),
            repeats: DEFAULT_REPEATS,
            llm_fraction: DEFAULT_LLM_FRACTION,
            bootstrap_resamples: DEFAULT_BOOTSTRAP_RESAMPLES,
            confidence: DEFAULT_CONFIDENCE,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ReportSection {
    /// Empty means one group per non-empty pool, holding the whole pool.
    pub groups: Vec<ReportGroup>,
    pub include_individuals: bool,
    pub q_matrix: bool,
}

impl Default for ReportSection {
    fn default() -> Self {
        ReportSection {
            groups: Vec::new(),
            include_individuals: true,
            q_matrix: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ElicitSection {
    #[serde(flatten)]
    pub config: ElicitationConfig,
    pub targets: Vec<String>,
}

impl Default for ElicitSection {
    fn default() -> Self {
        ElicitSection {
            config: ElicitationConfig::default(),
            targets: vec![DEFAULT_TARGET.to_string()],
        }
    }
}

/// Declarative run description read from a TOML file. Relative paths are
/// resolved against the file's directory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
    pub folds: usize,
    /// Defaults to a seed derived from `seed`.
    pub fold_seed: Option<u64>,
    pub format: FileFormat,
    pub out_dir: PathBuf,
    pub aggregators: Vec<AggregatorEntry>,
    pub data: DataSection,
    pub simulate: Option<SimulateSection>,
    pub sweep: SweepSection,
    pub report: ReportSection,
    pub elicit: Option<ElicitSection>,
    #[serde(skip)]
    pub base_dir: PathBuf,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            seed: 0,
            folds: 5,
            fold_seed: None,
            format: FileFormat::Csv,
            out_dir: PathBuf::from("out"),
            aggregators: AggregatorKind::ALL.into_iter().map(AggregatorEntry::Name).collect(),
            data: DataSection::default(),
            simulate: None,
            sweep: SweepSection::default(),
            report: ReportSection::default(),
            elicit: None,
            base_dir: PathBuf::from("."),
        }
    }
}

/// Command-line overrides; `None` keeps the file's value.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub folds: Option<usize>,
    pub sizes: Option<Vec<usize>>,
    pub repeats: Option<usize>,
    pub aggregators: Option<Vec<AggregatorKind>>,
    pub format: Option<FileFormat>,
    /// Taken as given (relative to the working directory).
    pub out_dir: Option<PathBuf>,
}

impl RunConfig {
    pub fn parse(text: &str, base_dir: impl Into<PathBuf>) -> Result<Self, HarnessError> {
        let mut config: RunConfig = toml::from_str(text).map_err(|e| HarnessError::Config(e.to_string()))?;
        config.base_dir = base_dir.into();
        Ok(config)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, HarnessError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| HarnessError::Io {
            path: path.display().to_string(),
            source,
        })?;
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        RunConfig::parse(&text, base)
    }

    pub fn apply(&mut self, o: &Overrides) {
        if let Some(s) = o.seed {
            self.seed = s;
        }
        if let Some(k) = o.folds {
            self.folds = k;
        }
        if let Some(s) = &o.sizes {
            self.sweep.sizes = s.clone();
        }
        if let Some(r) = o.repeats {
            self.sweep.repeats = r;
        }
        if let Some(a) = &o.aggregators {
            self.aggregators = a.iter().copied().map(AggregatorEntry::Name).collect();
        }
        if let Some(f) = o.format {
            self.format = f;
        }
        if let Some(d) = &o.out_dir {
            self.out_dir = std::env::current_dir().map(|c| c.join(d)).unwrap_or_else(|_| d.clone());
        }
    }

    pub fn resolve(&self, p: &Path) -> PathBuf {
        self.base_dir.join(p)
    }

    pub fn out_dir(&self) -> PathBuf {
        self.resolve(&self.out_dir)
    }

    pub fn fold_seed(&self) -> u64 {
        self.fold_seed.unwrap_or_else(|| derive_seed(self.seed, &[0xf0]))
    }

    /// Aggregator specs with seeds filled in from the run seed where a bare
    /// name was given.
    pub fn aggregator_specs(&self) -> Vec<AggregatorSpec> {
        self.aggregators
            .iter()
            .enumerate()
            .map(|(i, a)| match a {
                AggregatorEntry::Name(k) => AggregatorSpec::new(*k).with_seed(derive_seed(self.seed, &[0xa0, i as u64])),
                AggregatorEntry::Spec(s) => *s,
            })
            .collect()
    }

    fn inputs(&self) -> Vec<String> {
        let mut v: Vec<String> = self.data.corpus.iter().map(|p| p.display().to_string()).collect();
        v.extend(self.data.responses.iter().map(|p| p.display().to_string()));
        v.extend(self.data.profiles.iter().map(|p| p.display().to_string()));
        if self.data.corpus.is_none() && self.simulate.is_some() {
            v.push("simulated".into());
        }
        v
    }
}

/// Loaded (or simulated) inputs of a run.
#[derive(Debug, Clone)]
pub struct Workspace {
    pub corpus: Corpus,
    pub responses: ResponseMatrix,
    pub profiles: Vec<ResponderProfile>,
}

impl Workspace {
    /// Reads the data section, or simulates when no corpus path is given.
    pub fn load(config: &RunConfig) -> Result<Self, HarnessError> {
        let Some(corpus_path) = &config.data.corpus else {
            return match &config.simulate {
                Some(sim) => simulate(config, sim),
                None => Err(HarnessError::Config("neither [data].corpus nor [simulate] is set".into())),
            };
        };
        let path = config.resolve(corpus_path);
        let corpus = load_corpus(&path, FileFormat::from_path(&path)?)?;
        let mut responses = ResponseMatrix::new(&corpus, config.data.scale);
        for p in &config.data.responses {
            responses.merge(&load_responses(config.resolve(p), &corpus, config.data.scale)?)?;
        }
        let profiles = match &config.data.profiles {
            Some(p) => load_profiles(config.resolve(p))?,
            None => responses
                .responders()
                .iter()
                .map(|id| ResponderProfile::new(id.clone(), ResponderKind::Synthetic, None))
                .collect(),
        };
        for p in &profiles {
            if !responses.contains_responder(&p.id) {
                return Err(HarnessError::Config(format!("profile `{}` has no responses", p.id)));
            }
        }
        Ok(Workspace {
            corpus,
            responses,
            profiles,
        })
    }

    pub fn pools(&self) -> Pools {
        Pools::from_profiles(&self.profiles)
    }

    pub fn folds(&self, config: &RunConfig) -> Result<FoldAssignment, HarnessError> {
        Ok(make_folds(&self.corpus, config.folds, config.fold_seed())?)
    }
}

fn simulate(config: &RunConfig, sim: &SimulateSection) -> Result<Workspace, HarnessError> {
    if sim.members.is_empty() {
        return Err(HarnessError::Config("[simulate] has no members".into()));
    }
    let corpus = generate_corpus(sim.pairs_per_cell, derive_seed(config.seed, &[0x51]))?;
    let mut specs = Vec::new();
    let mut profiles = Vec::new();
    let mut per_kind: BTreeMap<&str, usize> = BTreeMap::new();
    for m in &sim.members {
        for j in 0..m.count {
            let n = per_kind.entry(m.kind.as_str()).or_default();
            let id = match (m.spec.id.is_empty(), m.count) {
                (true, _) => format!("{}{:02}", m.kind.as_str(), n),
                (false, 1) => m.spec.id.clone(),
                (false, _) => format!("{}-{j}", m.spec.id),
            };
            *n += 1;
            specs.push(m.spec.clone().named(id.clone()));
            profiles.push(ResponderProfile::new(id, m.kind, m.benchmark_score));
        }
    }
    let crowd = CrowdSpec::new(specs, sim.shared_noise_seed.unwrap_or_else(|| derive_seed(config.seed, &[0x52])));
    let responses = simulate_responses(&crowd, &corpus, derive_seed(config.seed, &[0x53]))?;
    Ok(Workspace {
        corpus,
        responses,
        profiles,
    })
}

fn write(path: PathBuf, text: &str) -> Result<PathBuf, HarnessError> {
    std::fs::write(&path, text).map_err(|source| HarnessError::Io {
        path: path.display().to_string(),
        source,
    })?;
    Ok(path)
}

fn create_out_dir(config: &RunConfig) -> Result<PathBuf, HarnessError> {
    let dir = config.out_dir();
    std::fs::create_dir_all(&dir).map_err(|source| HarnessError::Io {
        path: dir.display().to_string(),
        source,
    })?;
    Ok(dir)
}

fn default_groups(pools: &Pools) -> Vec<ReportGroup> {
    [GroupType::Llm, GroupType::Human, GroupType::Synthetic]
        .into_iter()
        .map(|g| ReportGroup {
            label: g.label().to_string(),
            members: pools.members(g),
        })
        .filter(|g| !g.members.is_empty())
        .collect()
}

fn default_group_types(pools: &Pools) -> Vec<GroupType> {
    let scored = !pools.llm.is_empty() && pools.llm.iter().all(|p| p.benchmark_score.is_some());
    let mut out = Vec::new();
    if !pools.llm.is_empty() {
        out.push(GroupType::Llm);
        if scored {
            out.push(GroupType::LlmPlus);
        }
    }
    if !pools.human.is_empty() {
        out.push(GroupType::Human);
    }
    if !pools.llm.is_empty() && !pools.human.is_empty() {
        out.push(GroupType::Hybrid);
        if scored {
            out.push(GroupType::HybridPlus);
        }
    }
    if !pools.synthetic.is_empty() {
        out.push(GroupType::Synthetic);
    }
    out
}

fn sweep_config(config: &RunConfig, pools: &Pools) -> SweepConfig {
    let s = &config.sweep;
    SweepConfig {
        group_types: if s.group_types.is_empty() {
            default_group_types(pools)
        } else {
            s.group_types.clone()
        },
        sizes: s.sizes.clone(),
        repeats: s.repeats,
        aggregators: config.aggregator_specs(),
        seed: derive_seed(config.seed, &[0x5e]),
        llm_fraction: s.llm_fraction,
        bootstrap_resamples: s.bootstrap_resamples,
        confidence: s.confidence,
    }
}

fn provenance(config: &RunConfig, folds: &FoldAssignment) -> Provenance {
    let mut p = Provenance::new(config.seed, folds, config.fold_seed(), &config.aggregator_specs());
    p.inputs = config.inputs();
    p
}

/// Builds the requested report sections and writes them to the out dir.
fn build_and_emit(config: &RunConfig, rows: bool, sweep: bool) -> Result<Vec<PathBuf>, HarnessError> {
    let ws = Workspace::load(config)?;
    let folds = ws.folds(config)?;
    let pools = ws.pools();
    let mut report = ExperimentReport::new(provenance(config, &folds));
    if rows {
        let groups = if config.report.groups.is_empty() {
            default_groups(&pools)
        } else {
            config.report.groups.clone()
        };
        report.rows = build_bias_report(
            &ws.corpus,
            &ws.responses,
            &groups,
            &config.aggregator_specs(),
            &folds,
            config.report.include_individuals,
        )?;
        if config.report.q_matrix {
            let mut ids: Vec<String> = Vec::new();
            for id in groups.iter().flat_map(|g| &g.members) {
                if !ids.contains(id) {
                    ids.push(id.clone());
                }
            }
            if ids.len() >= 2 {
                report.q_matrix = Some(build_q_matrix(&ws.corpus, &ws.responses, &ids)?);
            }
        }
        report.note_test_methods();
    }
    if sweep {
        let sc = sweep_config(config, &pools);
        report.sweep = run_size_sweep(&ws.corpus, &ws.responses, &pools, &sc, &folds)?;
        report.provenance.bootstrap_method = Some("percentile".into());
        report.provenance.sweep = Some(sc);
    }
    emit_report(&report, config.out_dir(), config.format)
}

/// Writes the simulated corpus, responses and profiles.
pub fn run_simulate(config: &RunConfig) -> Result<Vec<PathBuf>, HarnessError> {
    let Some(sim) = &config.simulate else {
        return Err(HarnessError::Config("missing [simulate] section".into()));
    };
    let ws = simulate(config, sim)?;
    let dir = create_out_dir(config)?;
    let corpus_name = match config.format {
        FileFormat::Csv => "corpus.csv",
        FileFormat::Json => "corpus.json",
    };
    Ok(vec![
        write(dir.join(corpus_name), &corpus_to_string(&ws.corpus, config.format))?,
        write(dir.join("responses.csv"), &responses_to_string(&ws.responses))?,
        write(dir.join("profiles.csv"), &profiles_to_string(&ws.profiles))?,
    ])
}

#[derive(Serialize)]
struct IngestSummary {
    headlines: usize,
    responders: usize,
    coverage: BTreeMap<String, usize>,
    pools: BTreeMap<String, usize>,
    imbalance_warnings: Vec<String>,
}

/// Validates the data section and writes `ingest_summary.json`.
pub fn run_ingest(config: &RunConfig) -> Result<Vec<PathBuf>, HarnessError> {
    if config.data.corpus.is_none() {
        return Err(HarnessError::Config("ingest needs [data].corpus".into()));
    }
    let ws = Workspace::load(config)?;
    let pools = ws.pools();
    let summary = IngestSummary {
        headlines: ws.corpus.len(),
        responders: ws.responses.responders().len(),
        coverage: ws
            .responses
            .responders()
            .iter()
            .map(|id| Ok((id.clone(), ws.responses.coverage(id)?)))
            .collect::<Result<_, HarnessError>>()?,
        pools: [("llm", pools.llm.len()), ("human", pools.human.len()), ("synthetic", pools.synthetic.len())]
            .into_iter()
            .map(|(k, n)| (k.to_string(), n))
            .collect(),
        imbalance_warnings: ws.corpus.imbalance_warnings().iter().map(|w| w.to_string()).collect(),
    };
    let dir = create_out_dir(config)?;
    let text = serde_json::to_string_pretty(&summary).expect("summary serializes") + "\n";
    Ok(vec![write(dir.join("ingest_summary.json"), &text)?])
}

/// Queries `endpoint` for every headline and target word and writes one
/// long-format response file per target.
pub fn run_elicit(config: &RunConfig, endpoint: &dyn ChatEndpoint) -> Result<Vec<PathBuf>, HarnessError> {
    let Some(section) = &config.elicit else {
        return Err(HarnessError::Config("missing [elicit] section".into()));
    };
    let ws = Workspace::load(config)?;
    let mut ec = section.config.clone();
    ec.cache_path = config.resolve(&ec.cache_path);
    let outcome = elicit_all(&ec, endpoint, &ws.corpus, &section.targets)?;
    let dir = create_out_dir(config)?;
    outcome
        .matrices
        .iter()
        .map(|(target, m)| write(dir.join(format!("responses_{target}.csv")), &responses_to_string(m)))
        .collect()
}

/// HTTP endpoint built from the `[elicit]` section.
#[cfg(feature = "http")]
pub fn http_endpoint(config: &RunConfig) -> Result<crate::elicit::HttpEndpoint, HarnessError> {
    let Some(section) = &config.elicit else {
        return Err(HarnessError::Config("missing [elicit] section".into()));
    };
    let adapter = section.config.load_adapter(&config.base_dir)?;
    crate::elicit::HttpEndpoint::new(adapter).map_err(|e| HarnessError::Config(e.message))
}

/// Bias rows and Q-matrix.
pub fn run_evaluate(config: &RunConfig) -> Result<Vec<PathBuf>, HarnessError> {
    build_and_emit(config, true, false)
}

/// Size sweep only.
pub fn run_sweep(config: &RunConfig) -> Result<Vec<PathBuf>, HarnessError> {
    build_and_emit(config, false, true)
}

/// Bias rows, Q-matrix and size sweep.
pub fn run_report(config: &RunConfig) -> Result<Vec<PathBuf>, HarnessError> {
    build_and_emit(config, true, true)
}
