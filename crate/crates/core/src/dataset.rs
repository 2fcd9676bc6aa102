//! Counterfactual headline corpus, responder profiles, response matrices and
//! pair-coupled cross-validation folds.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::rng;

#[derive(Debug, thiserror::Error)]
pub enum DatasetError {
    #[error("parse error at line {line}: {message}")]
    Parse { line: u64, message: String },
    #[error("invariant violated for `{id}`: {reason}")]
    Invariant { id: String, reason: String },
    #[error("unknown headline id `{0}`")]
    UnknownId(String),
    #[error("unknown responder `{0}`")]
    UnknownResponder(String),
    #[error("duplicate responder `{0}`")]
    DuplicateResponder(String),
    #[error("likert label {0} outside 1..=5")]
    OutOfRange(i64),
    #[error("likelihood {value} not allowed for {scale:?} matrix")]
    InvalidLikelihood { value: f64, scale: LikelihoodScale },
    #[error("fold count must be at least 2, got {0}")]
    InvalidFoldCount(usize),
    #[error("need at least {k} counterfactual pairs for {k} folds, corpus has {pairs}")]
    TooFewPairs { k: usize, pairs: usize },
    #[error("response matrix columns do not match the corpus")]
    Misaligned,
    #[error("unsupported file format `{0}`")]
    UnknownFormat(String),
    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

fn io_err(path: &Path, source: std::io::Error) -> DatasetError {
    DatasetError::Io {
        path: path.display().to_string(),
        source,
    }
}

macro_rules! string_enum {
    ($name:ident { $($variant:ident => $text:literal),+ $(,)? }) => {
        impl $name {
            pub fn as_str(self) -> &'static str {
                match self {
                    $($name::$variant => $text),+
                }
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(self.as_str())
            }
        }

        impl FromStr for $name {
            type Err = String;

            fn from_str(s: &str) -> Result<Self, Self::Err> {
                match s {
                    $($text => Ok($name::$variant),)+
                    other => Err(format!("invalid {} `{}`", stringify!($name).to_lowercase(), other)),
                }
            }
        }
    };
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Category {
    Age,
    Gender,
    Ethnicity,
}

string_enum!(Category { Age => "age", Gender => "gender", Ethnicity => "ethnicity" });

impl Category {
    pub const ALL: [Category; 3] = [Category::Age, Category::Gender, Category::Ethnicity];

    /// The two groups of this category, historically privileged group first
    /// (older, white, male).
    pub fn groups(self) -> [Group; 2] {
        match self {
            Category::Age => [Group::Old, Group::Young],
            Category::Gender => [Group::Man, Group::Woman],
            Category::Ethnicity => [Group::White, Group::AfricanAmerican],
        }
    }

    pub fn privileged(self) -> Group {
        self.groups()[0]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Group {
    Man,
    Woman,
    Young,
    Old,
    White,
    AfricanAmerican,
}

string_enum!(Group {
    Man => "man",
    Woman => "woman",
    Young => "young",
    Old => "old",
    White => "white",
    AfricanAmerican => "african_american",
});

impl Group {
    pub const ALL: [Group; 6] = [
        Group::Man,
        Group::Woman,
        Group::Young,
        Group::Old,
        Group::White,
        Group::AfricanAmerican,
    ];

    pub fn category(self) -> Category {
        match self {
            Group::Man | Group::Woman => Category::Gender,
            Group::Young | Group::Old => Category::Age,
            Group::White | Group::AfricanAmerican => Category::Ethnicity,
        }
    }

    pub fn complement(self) -> Group {
        match self {
            Group::Man => Group::Woman,
            Group::Woman => Group::Man,
            Group::Young => Group::Old,
            Group::Old => Group::Young,
            Group::White => Group::AfricanAmerican,
            Group::AfricanAmerican => Group::White,
        }
    }

    pub fn is_privileged(self) -> bool {
        self.category().privileged() == self
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Sentiment {
    Positive,
    Negative,
}

string_enum!(Sentiment { Positive => "positive", Negative => "negative" });

impl Sentiment {
    pub const ALL: [Sentiment; 2] = [Sentiment::Positive, Sentiment::Negative];
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Genuine,
    Altered,
}

string_enum!(Status { Genuine => "genuine", Altered => "altered" });

impl Status {
    pub const ALL: [Status; 2] = [Status::Genuine, Status::Altered];

    /// Binary fitting target: 1 for genuine, 0 for altered.
    pub fn target(self) -> f64 {
        match self {
            Status::Genuine => 1.0,
            Status::Altered => 0.0,
        }
    }

    pub fn opposite(self) -> Status {
        match self {
            Status::Genuine => Status::Altered,
            Status::Altered => Status::Genuine,
        }
    }
}

/// One corpus item. Column order matches the on-disk format.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Headline {
    pub id: String,
    pub text: String,
    pub category: Category,
    pub group: Group,
    pub sentiment: Sentiment,
    pub status: Status,
    pub partner_id: String,
}

/// A (category, status, sentiment, group) cell of the balanced design.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct CellKey {
    pub category: Category,
    pub status: Status,
    pub sentiment: Sentiment,
    pub group: Group,
}

impl CellKey {
    pub fn of(h: &Headline) -> Self {
        CellKey {
            category: h.category,
            status: h.status,
            sentiment: h.sentiment,
            group: h.group,
        }
    }

    /// All 24 cells in a fixed order.
    pub fn all() -> Vec<CellKey> {
        let mut out = Vec::with_capacity(24);
        for category in Category::ALL {
            for status in Status::ALL {
                for sentiment in Sentiment::ALL {
                    for group in category.groups() {
                        out.push(CellKey {
                            category,
                            status,
                            sentiment,
                            group,
                        });
                    }
                }
            }
        }
        out
    }
}

impl fmt::Display for CellKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}/{}/{}", self.category, self.status, self.sentiment, self.group)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ImbalanceWarning {
    pub cell: CellKey,
    pub count: usize,
    pub expected: usize,
}

impl fmt::Display for ImbalanceWarning {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "imbalanced cell {}: {} headlines, expected {}",
            self.cell, self.count, self.expected
        )
    }
}

/// A validated headline corpus. Immutable after construction.
#[derive(Debug, Clone, PartialEq)]
pub struct Corpus {
    headlines: Vec<Headline>,
    metadata: String,
    index: HashMap<String, usize>,
    partner: Vec<usize>,
}

impl Corpus {
    /// Builds a corpus, checking id uniqueness and the partner invariants.
    pub fn new(headlines: Vec<Headline>, metadata: impl Into<String>) -> Result<Self, DatasetError> {
        let mut index = HashMap::with_capacity(headlines.len());
        for (i, h) in headlines.iter().enumerate() {
            if index.insert(h.id.clone(), i).is_some() {
                return Err(DatasetError::Invariant {
                    id: h.id.clone(),
                    reason: "duplicate id".into(),
                });
            }
        }

        let mut partner = Vec::with_capacity(headlines.len());
        for h in &headlines {
            let invariant = |reason: String| DatasetError::Invariant {
                id: h.id.clone(),
                reason,
            };
            if h.group.category() != h.category {
                return Err(invariant(format!(
                    "group `{}` does not belong to category `{}`",
                    h.group, h.category
                )));
            }
            let &j = index
                .get(&h.partner_id)
                .ok_or_else(|| invariant(format!("dangling partner id `{}`", h.partner_id)))?;
            let p = &headlines[j];
            if p.id == h.id {
                return Err(invariant("headline is its own partner".into()));
            }
            if p.partner_id != h.id {
                return Err(invariant(format!(
                    "partner `{}` points back to `{}`",
                    p.id, p.partner_id
                )));
            }
            if p.category != h.category || p.group != h.group.complement() {
                return Err(invariant(format!(
                    "partner `{}` must mention the complementary group of `{}`",
                    p.id, h.group
                )));
            }
            if p.sentiment != h.sentiment {
                return Err(invariant(format!("partner `{}` has a different sentiment", p.id)));
            }
            if p.status != h.status.opposite() {
                return Err(invariant(format!("partner `{}` has the same status", p.id)));
            }
            partner.push(j);
        }

        Ok(Corpus {
            headlines,
            metadata: metadata.into(),
            index,
            partner,
        })
    }

    pub fn headlines(&self) -> &[Headline] {
        &self.headlines
    }

    pub fn metadata(&self) -> &str {
        &self.metadata
    }

    pub fn len(&self) -> usize {
        self.headlines.len()
    }

    pub fn is_empty(&self) -> bool {
        self.headlines.is_empty()
    }

    pub fn index_of(&self, id: &str) -> Option<usize> {
        self.index.get(id).copied()
    }

    pub fn get(&self, id: &str) -> Option<&Headline> {
        self.index_of(id).map(|i| &self.headlines[i])
    }

    pub fn partner_index(&self, i: usize) -> usize {
        self.partner[i]
    }

    pub fn counterfactual_partner(&self, id: &str) -> Result<&Headline, DatasetError> {
        let i = self
            .index_of(id)
            .ok_or_else(|| DatasetError::UnknownId(id.to_string()))?;
        Ok(&self.headlines[self.partner[i]])
    }

    /// Counterfactual pairs as (lower index, higher index), in corpus order.
    pub fn pairs(&self) -> Vec<(usize, usize)> {
        self.partner
            .iter()
            .enumerate()
            .filter(|&(i, &j)| i < j)
            .map(|(i, &j)| (i, j))
            .collect()
    }

    pub fn cell_counts(&self) -> BTreeMap<CellKey, usize> {
        let mut counts: BTreeMap<CellKey, usize> = CellKey::all().into_iter().map(|c| (c, 0)).collect();
        for h in &self.headlines {
            *counts.entry(CellKey::of(h)).or_default() += 1;
        }
        counts
    }

    /// One warning per cell whose count differs from the largest cell.
    pub fn imbalance_warnings(&self) -> Vec<ImbalanceWarning> {
        let counts = self.cell_counts();
        let expected = counts.values().copied().max().unwrap_or(0);
        counts
            .into_iter()
            .filter(|&(_, n)| n != expected)
            .map(|(cell, count)| ImbalanceWarning { cell, count, expected })
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FileFormat {
    Csv,
    Json,
}

impl FromStr for FileFormat {
    type Err = DatasetError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "csv" => Ok(FileFormat::Csv),
            "json" => Ok(FileFormat::Json),
            other => Err(DatasetError::UnknownFormat(other.to_string())),
        }
    }
}

impl FileFormat {
    pub fn from_path(path: &Path) -> Result<Self, DatasetError> {
        path.extension()
            .and_then(|e| e.to_str())
            .unwrap_or_default()
            .parse()
    }
}

const CORPUS_COLUMNS: [&str; 7] = ["id", "text", "category", "group", "sentiment", "status", "partner_id"];

#[derive(Serialize, Deserialize)]
struct CorpusDocument {
    #[serde(default)]
    metadata: String,
    headlines: Vec<Headline>,
}

#[derive(Deserialize)]
#[serde(untagged)]
enum CorpusJson {
    Document(CorpusDocument),
    Bare(Vec<Headline>),
}

/// Loads and validates a corpus file.
///
/// CSV files may carry the metadata string on a leading `# ` comment line.
/// JSON files hold either `{"metadata": .., "headlines": [..]}` or a bare array.
pub fn load_corpus(path: impl AsRef<Path>, format: FileFormat) -> Result<Corpus, DatasetError> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| io_err(path, e))?;
    parse_corpus(&text, format)
}

pub fn parse_corpus(text: &str, format: FileFormat) -> Result<Corpus, DatasetError> {
    match format {
        FileFormat::Csv => {
            let (metadata, body, offset) = match text.split_once('\n') {
                Some((first, rest)) if first.starts_with('#') => {
                    (first.trim_start_matches('#').trim().to_string(), rest, 1)
                }
                _ => (String::new(), text, 0),
            };
            let mut reader = csv::ReaderBuilder::new().from_reader(body.as_bytes());
            let headers = reader.headers().map_err(|e| csv_err(e, offset))?.clone();
            if headers.iter().ne(CORPUS_COLUMNS.iter().copied()) {
                return Err(DatasetError::Parse {
                    line: offset + 1,
                    message: format!("expected columns `{}`", CORPUS_COLUMNS.join(",")),
                });
            }
            let headlines = reader
                .deserialize()
                .collect::<Result<Vec<Headline>, _>>()
                .map_err(|e| csv_err(e, offset))?;
            Corpus::new(headlines, metadata)
        }
        FileFormat::Json => {
            let doc: CorpusJson = serde_json::from_str(text).map_err(|e| DatasetError::Parse {
                line: e.line() as u64,
                message: e.to_string(),
            })?;
            match doc {
                CorpusJson::Document(d) => Corpus::new(d.headlines, d.metadata),
                CorpusJson::Bare(h) => Corpus::new(h, ""),
            }
        }
    }
}

fn csv_err(e: csv::Error, offset: u64) -> DatasetError {
    let line = e.position().map(|p| p.line()).unwrap_or(0) + offset;
    DatasetError::Parse {
        line,
        message: e.to_string(),
    }
}

pub fn corpus_to_string(corpus: &Corpus, format: FileFormat) -> String {
    match format {
        FileFormat::Csv => {
            let mut writer = csv::Writer::from_writer(Vec::new());
            for h in corpus.headlines() {
                writer.serialize(h).expect("in-memory csv write");
            }
            if corpus.is_empty() {
                writer.write_record(CORPUS_COLUMNS).expect("in-memory csv write");
            }
            let body = String::from_utf8(writer.into_inner().expect("flush")).expect("utf-8");
            if corpus.metadata().is_empty() {
                body
            } else {
                format!("# {}\n{}", corpus.metadata().replace('\n', " "), body)
            }
        }
        FileFormat::Json => {
            let doc = CorpusDocument {
                metadata: corpus.metadata().to_string(),
                headlines: corpus.headlines().to_vec(),
            };
            serde_json::to_string_pretty(&doc).expect("corpus serializes") + "\n"
        }
    }
}

pub fn save_corpus(corpus: &Corpus, path: impl AsRef<Path>, format: FileFormat) -> Result<(), DatasetError> {
    let path = path.as_ref();
    fs::write(path, corpus_to_string(corpus, format)).map_err(|e| io_err(path, e))
}

/// Maps a 5-point Likert label onto `{0, 0.25, 0.5, 0.75, 1}`.
pub fn likert_to_likelihood(label: i64) -> Result<f64, DatasetError> {
    if (1..=5).contains(&label) {
        Ok((label - 1) as f64 / 4.0)
    } else {
        Err(DatasetError::OutOfRange(label))
    }
}

/// Inverse of [`likert_to_likelihood`]; `None` for values off the grid.
pub fn likelihood_to_likert(p: f64) -> Option<u8> {
    LIKERT_LEVELS.iter().position(|&v| v == p).map(|i| i as u8 + 1)
}

pub const LIKERT_LEVELS: [f64; 5] = [0.0, 0.25, 0.5, 0.75, 1.0];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ResponderKind {
    Human,
    Llm,
    Synthetic,
}

string_enum!(ResponderKind { Human => "human", Llm => "llm", Synthetic => "synthetic" });

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResponderProfile {
    #[serde(rename = "responder_id")]
    pub id: String,
    pub kind: ResponderKind,
    /// MMLU-style benchmark score in [0, 100].
    pub benchmark_score: Option<f64>,
}

impl ResponderProfile {
    pub fn new(id: impl Into<String>, kind: ResponderKind, benchmark_score: Option<f64>) -> Self {
        ResponderProfile {
            id: id.into(),
            kind,
            benchmark_score,
        }
    }
}

pub fn load_profiles(path: impl AsRef<Path>) -> Result<Vec<ResponderProfile>, DatasetError> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| io_err(path, e))?;
    parse_profiles(&text)
}

pub fn parse_profiles(text: &str) -> Result<Vec<ResponderProfile>, DatasetError> {
    let mut reader = csv::Reader::from_reader(text.as_bytes());
    let mut seen = HashSet::new();
    let mut out = Vec::new();
    for (row, record) in reader.deserialize::<ResponderProfile>().enumerate() {
        let p = record.map_err(|e| csv_err(e, 0))?;
        if let Some(s) = p.benchmark_score {
            if !(0.0..=100.0).contains(&s) {
                return Err(DatasetError::Parse {
                    line: row as u64 + 2,
                    message: format!("benchmark score {s} outside [0, 100]"),
                });
            }
        }
        if !seen.insert(p.id.clone()) {
            return Err(DatasetError::DuplicateResponder(p.id));
        }
        out.push(p);
    }
    Ok(out)
}

pub fn profiles_to_string(profiles: &[ResponderProfile]) -> String {
    let mut writer = csv::Writer::from_writer(Vec::new());
    writer
        .write_record(["responder_id", "kind", "benchmark_score"])
        .expect("in-memory csv write");
    for p in profiles {
        let score = p.benchmark_score.map(|s| s.to_string()).unwrap_or_default();
        writer
            .write_record([p.id.as_str(), p.kind.as_str(), score.as_str()])
            .expect("in-memory csv write");
    }
    String::from_utf8(writer.into_inner().expect("flush")).expect("utf-8")
}

/// Whether a matrix holds raw Likert-derived likelihoods or aggregated ones.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LikelihoodScale {
    /// Values restricted to `{0, 0.25, 0.5, 0.75, 1}`.
    Likert,
    /// Any value in `[0, 1]`.
    Continuous,
}

impl LikelihoodScale {
    pub fn admits(self, p: f64) -> bool {
        match self {
            LikelihoodScale::Likert => LIKERT_LEVELS.contains(&p),
            LikelihoodScale::Continuous => (0.0..=1.0).contains(&p),
        }
    }
}

/// Responder x headline grid of likelihoods. Columns follow corpus order;
/// `None` marks a missing response.
#[derive(Debug, Clone, PartialEq)]
pub struct ResponseMatrix {
    scale: LikelihoodScale,
    headline_ids: Vec<String>,
    headline_index: HashMap<String, usize>,
    responders: Vec<String>,
    responder_index: HashMap<String, usize>,
    rows: Vec<Vec<Option<f64>>>,
}

impl ResponseMatrix {
    pub fn new(corpus: &Corpus, scale: LikelihoodScale) -> Self {
        let headline_ids: Vec<String> = corpus.headlines().iter().map(|h| h.id.clone()).collect();
        let headline_index = headline_ids.iter().enumerate().map(|(i, id)| (id.clone(), i)).collect();
        ResponseMatrix {
            scale,
            headline_ids,
            headline_index,
            responders: Vec::new(),
            responder_index: HashMap::new(),
            rows: Vec::new(),
        }
    }

    pub fn scale(&self) -> LikelihoodScale {
        self.scale
    }

    pub fn responders(&self) -> &[String] {
        &self.responders
    }

    pub fn headline_ids(&self) -> &[String] {
        &self.headline_ids
    }

    pub fn add_responder(&mut self, id: impl Into<String>) -> Result<usize, DatasetError> {
        let id = id.into();
        if self.responder_index.contains_key(&id) {
            return Err(DatasetError::DuplicateResponder(id));
        }
        let r = self.responders.len();
        self.responder_index.insert(id.clone(), r);
        self.responders.push(id);
        self.rows.push(vec![None; self.headline_ids.len()]);
        Ok(r)
    }

    /// Adds a full row at once; values must be aligned with corpus order.
    pub fn push_row(&mut self, id: impl Into<String>, values: Vec<Option<f64>>) -> Result<(), DatasetError> {
        if values.len() != self.headline_ids.len() {
            return Err(DatasetError::Misaligned);
        }
        if let Some(&bad) = values.iter().flatten().find(|&&p| !self.scale.admits(p)) {
            return Err(DatasetError::InvalidLikelihood {
                value: bad,
                scale: self.scale,
            });
        }
        let r = self.add_responder(id)?;
        self.rows[r] = values;
        Ok(())
    }

    pub fn set(&mut self, responder: &str, headline: &str, p: f64) -> Result<(), DatasetError> {
        if !self.scale.admits(p) {
            return Err(DatasetError::InvalidLikelihood {
                value: p,
                scale: self.scale,
            });
        }
        let r = self.responder_position(responder)?;
        let c = *self
            .headline_index
            .get(headline)
            .ok_or_else(|| DatasetError::UnknownId(headline.to_string()))?;
        self.rows[r][c] = Some(p);
        Ok(())
    }

    pub fn get(&self, responder: &str, headline: &str) -> Result<Option<f64>, DatasetError> {
        let row = self.row(responder)?;
        let c = *self
            .headline_index
            .get(headline)
            .ok_or_else(|| DatasetError::UnknownId(headline.to_string()))?;
        Ok(row[c])
    }

    pub fn responder_position(&self, responder: &str) -> Result<usize, DatasetError> {
        self.responder_index
            .get(responder)
            .copied()
            .ok_or_else(|| DatasetError::UnknownResponder(responder.to_string()))
    }

    pub fn contains_responder(&self, responder: &str) -> bool {
        self.responder_index.contains_key(responder)
    }

    /// The responder's likelihoods, aligned with corpus order.
    pub fn row(&self, responder: &str) -> Result<&[Option<f64>], DatasetError> {
        Ok(&self.rows[self.responder_position(responder)?])
    }

    pub fn row_at(&self, r: usize) -> &[Option<f64>] {
        &self.rows[r]
    }

    /// Number of answered headlines for a responder.
    pub fn coverage(&self, responder: &str) -> Result<usize, DatasetError> {
        Ok(self.row(responder)?.iter().filter(|p| p.is_some()).count())
    }

    pub fn ensure_aligned(&self, corpus: &Corpus) -> Result<(), DatasetError> {
        if self.headline_ids.len() == corpus.len()
            && self.headline_ids.iter().zip(corpus.headlines()).all(|(a, h)| *a == h.id)
        {
            Ok(())
        } else {
            Err(DatasetError::Misaligned)
        }
    }

    /// Merges the rows of `other` (same corpus) into this matrix.
    pub fn merge(&mut self, other: &ResponseMatrix) -> Result<(), DatasetError> {
        if other.headline_ids != self.headline_ids {
            return Err(DatasetError::Misaligned);
        }
        for (id, row) in other.responders.iter().zip(&other.rows) {
            self.push_row(id.clone(), row.clone())?;
        }
        Ok(())
    }
}

#[derive(Deserialize)]
struct ResponseRecord {
    responder_id: String,
    headline_id: String,
    label: Option<i64>,
    likelihood: Option<f64>,
}

/// Loads a long-format response file with either a `label` (1..5) or a
/// pre-mapped `likelihood` column.
pub fn load_responses(
    path: impl AsRef<Path>,
    corpus: &Corpus,
    scale: LikelihoodScale,
) -> Result<ResponseMatrix, DatasetError> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| io_err(path, e))?;
    parse_responses(&text, corpus, scale)
}

pub fn parse_responses(text: &str, corpus: &Corpus, scale: LikelihoodScale) -> Result<ResponseMatrix, DatasetError> {
    let mut reader = csv::Reader::from_reader(text.as_bytes());
    let mut matrix = ResponseMatrix::new(corpus, scale);
    for (row, record) in reader.deserialize::<ResponseRecord>().enumerate() {
        let line = row as u64 + 2;
        let rec = record.map_err(|e| csv_err(e, 0))?;
        let p = match (rec.label, rec.likelihood) {
            (Some(label), _) => likert_to_likelihood(label).map_err(|e| DatasetError::Parse {
                line,
                message: e.to_string(),
            })?,
            (None, Some(p)) => p,
            (None, None) => {
                return Err(DatasetError::Parse {
                    line,
                    message: "row has neither `label` nor `likelihood`".into(),
                })
            }
        };
        if corpus.index_of(&rec.headline_id).is_none() {
            return Err(DatasetError::UnknownId(rec.headline_id));
        }
        if !matrix.contains_responder(&rec.responder_id) {
            matrix.add_responder(rec.responder_id.clone())?;
        }
        matrix.set(&rec.responder_id, &rec.headline_id, p)?;
    }
    Ok(matrix)
}

/// Long-format serialization. Likert matrices are written as labels.
pub fn responses_to_string(matrix: &ResponseMatrix) -> String {
    let mut writer = csv::Writer::from_writer(Vec::new());
    let value_col = match matrix.scale() {
        LikelihoodScale::Likert => "label",
        LikelihoodScale::Continuous => "likelihood",
    };
    writer
        .write_record(["responder_id", "headline_id", value_col])
        .expect("in-memory csv write");
    for (r, id) in matrix.responders().iter().enumerate() {
        for (c, p) in matrix.row_at(r).iter().enumerate() {
            let Some(p) = p else { continue };
            let value = match matrix.scale() {
                LikelihoodScale::Likert => likelihood_to_likert(*p).expect("likert value").to_string(),
                LikelihoodScale::Continuous => format!("{p:.6}"),
            };
            writer
                .write_record([id.as_str(), matrix.headline_ids()[c].as_str(), value.as_str()])
                .expect("in-memory csv write");
        }
    }
    String::from_utf8(writer.into_inner().expect("flush")).expect("utf-8")
}

/// Assignment of every headline to one of `k` folds, aligned with corpus order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FoldAssignment {
    k: usize,
    assignment: Vec<usize>,
}

impl FoldAssignment {
    pub fn k(&self) -> usize {
        self.k
    }

    pub fn fold_of_index(&self, i: usize) -> usize {
        self.assignment[i]
    }

    pub fn fold_of(&self, corpus: &Corpus, id: &str) -> Option<usize> {
        corpus.index_of(id).map(|i| self.assignment[i])
    }

    pub fn assignment(&self) -> &[usize] {
        &self.assignment
    }

    /// Headline counts per fold.
    pub fn fold_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.k];
        for &f in &self.assignment {
            sizes[f] += 1;
        }
        sizes
    }

    pub fn to_map(&self, corpus: &Corpus) -> BTreeMap<String, usize> {
        corpus
            .headlines()
            .iter()
            .zip(&self.assignment)
            .map(|(h, &f)| (h.id.clone(), f))
            .collect()
    }
}

/// Shuffles pairs and deals them round-robin into `k` folds; returns the fold of each pair.
pub(crate) fn deal_pairs(n_pairs: usize, k: usize, seed: u64) -> Vec<usize> {
    let mut order: Vec<usize> = (0..n_pairs).collect();
    order.shuffle(&mut rng::rng_from(seed));
    let mut fold = vec![0; n_pairs];
    for (slot, &p) in order.iter().enumerate() {
        fold[p] = slot % k;
    }
    fold
}

/// Pair-coupled folds: a headline and its counterfactual partner always share a fold.
pub fn make_folds(corpus: &Corpus, k: usize, seed: u64) -> Result<FoldAssignment, DatasetError> {
    if k < 2 {
        return Err(DatasetError::InvalidFoldCount(k));
    }
    let pairs = corpus.pairs();
    if pairs.len() < k {
        return Err(DatasetError::TooFewPairs { k, pairs: pairs.len() });
    }
    let pair_fold = deal_pairs(pairs.len(), k, seed);
    let mut assignment = vec![0; corpus.len()];
    for (&(a, b), &f) in pairs.iter().zip(&pair_fold) {
        assignment[a] = f;
        assignment[b] = f;
    }
    Ok(FoldAssignment { k, assignment })
}


#[cfg(test)]
mod tests {
    use super::fixtures::*;
    use super::*;
    use proptest::prelude::*;

    fn four_rows() -> Vec<Headline> {
        vec![
            headline("g1", Group::Man, Sentiment::Positive, Status::Genuine, "g2"),
            headline("g2", Group::Woman, Sentiment::Positive, Status::Altered, "g1"),
            headline("a1", Group::Old, Sentiment::Negative, Status::Genuine, "a2"),
            headline("a2", Group::Young, Sentiment::Negative, Status::Altered, "a1"),
        ]
    }

    #[test]
    fn minimal_corpus_has_two_pairs() {
        let c = Corpus::new(four_rows(), "").unwrap();
        assert_eq!(c.len(), 4);
        assert_eq!(c.pairs(), vec![(0, 1), (2, 3)]);
    }

    #[test]
    fn dangling_partner_names_the_id() {
        let mut rows = four_rows();
        rows[3].partner_id = "x42".into();
        let err = Corpus::new(rows, "").unwrap_err();
        assert!(err.to_string().contains("x42"), "{err}");
    }

    #[test]
    fn group_category_mismatch_rejected() {
        let mut rows = four_rows();
        rows[0].category = Category::Age;
        assert!(matches!(Corpus::new(rows, ""), Err(DatasetError::Invariant { .. })));
    }

    #[test]
    fn partner_with_same_status_rejected() {
        let mut rows = four_rows();
        rows[1].status = Status::Genuine;
        assert!(matches!(Corpus::new(rows, ""), Err(DatasetError::Invariant { .. })));
    }

    #[test]
    fn duplicate_ids_rejected() {
        let mut rows = four_rows();
        rows[2].id = "g1".into();
        assert!(matches!(Corpus::new(rows, ""), Err(DatasetError::Invariant { .. })));
    }

    #[test]
    fn balanced_48_has_no_warnings() {
        let c = balanced(2);
        assert_eq!(c.len(), 48);
        // brute-force recount of each cell
        for cell in CellKey::all() {
            let n = c.headlines().iter().filter(|h| CellKey::of(h) == cell).count();
            assert_eq!(n, 2, "{cell}");
        }
        assert!(c.imbalance_warnings().is_empty());
    }

    #[test]
    fn unbalanced_corpus_warns() {
        let c = Corpus::new(four_rows(), "").unwrap();
        let w = c.imbalance_warnings();
        assert_eq!(w.len(), 20);
        assert!(w[0].to_string().starts_with("imbalanced cell"));
    }

    #[test]
    fn partner_lookup() {
        let c = Corpus::new(four_rows(), "").unwrap();
        let p = c.counterfactual_partner("g1").unwrap();
        assert_eq!(p.id, "g2");
        assert_eq!((p.status, p.sentiment, p.group), (Status::Altered, Sentiment::Positive, Group::Woman));
        assert!(matches!(c.counterfactual_partner("x999"), Err(DatasetError::UnknownId(_))));

        let big = balanced(2);
        for h in big.headlines() {
            let p = big.counterfactual_partner(&h.id).unwrap();
            assert_eq!(big.counterfactual_partner(&p.id).unwrap().id, h.id);
            assert_ne!(p.id, h.id);
        }
    }

    #[test]
    fn likert_map() {
        assert_eq!(likert_to_likelihood(1).unwrap(), 0.0);
        assert_eq!(likert_to_likelihood(3).unwrap(), 0.5);
        assert!(matches!(likert_to_likelihood(6), Err(DatasetError::OutOfRange(6))));
        assert!(likert_to_likelihood(0).is_err());
        for label in 1..=5 {
            let p = likert_to_likelihood(label).unwrap();
            assert_eq!(likelihood_to_likert(p), Some(label as u8));
        }
    }

    fn corpus_with_pairs(n: usize) -> Corpus {
        let hs = (0..n)
            .flat_map(|i| {
                let a = format!("p{i}a");
                let b = format!("p{i}b");
                [
                    headline(&a, Group::White, Sentiment::Positive, Status::Genuine, &b),
                    headline(&b, Group::AfricanAmerican, Sentiment::Positive, Status::Altered, &a),
                ]
            })
            .collect();
        Corpus::new(hs, "").unwrap()
    }

    #[test]
    fn folds_exact_division() {
        let c = corpus_with_pairs(10);
        let f = make_folds(&c, 5, 1).unwrap();
        assert_eq!(f.fold_sizes(), vec![4; 5]);
    }

    #[test]
    fn folds_uneven_division() {
        let c = corpus_with_pairs(11);
        let f = make_folds(&c, 5, 1).unwrap();
        let mut pair_hist = f.fold_sizes().iter().map(|s| s / 2).collect::<Vec<_>>();
        pair_hist.sort();
        assert_eq!(pair_hist, vec![2, 2, 2, 2, 3]);
    }

    #[test]
    fn folds_deterministic_and_checked() {
        let c = corpus_with_pairs(11);
        assert_eq!(make_folds(&c, 5, 9).unwrap(), make_folds(&c, 5, 9).unwrap());
        assert!(matches!(make_folds(&c, 1, 0), Err(DatasetError::InvalidFoldCount(1))));
        assert!(matches!(make_folds(&c, 12, 0), Err(DatasetError::TooFewPairs { .. })));
    }

    #[test]
    fn csv_parse_error_has_line() {
        let text = "id,text,category,group,sentiment,status,partner_id\n\
                    g1,t,gender,man,positive,genuine,g2\n\
                    g2,t,gender,robot,positive,altered,g1\n";
        match parse_corpus(text, FileFormat::Csv) {
            Err(DatasetError::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn csv_header_checked() {
        let text = "id,text,category,group,sentiment,status\n";
        assert!(matches!(parse_corpus(text, FileFormat::Csv), Err(DatasetError::Parse { line: 1, .. })));
    }

    #[test]
    fn responses_reject_off_grid_and_unknown() {
        let c = Corpus::new(four_rows(), "").unwrap();
        let mut m = ResponseMatrix::new(&c, LikelihoodScale::Likert);
        m.add_responder("r").unwrap();
        assert!(m.set("r", "g1", 0.3).is_err());
        assert!(matches!(m.set("r", "zz", 0.5), Err(DatasetError::UnknownId(_))));
        assert!(matches!(m.set("q", "g1", 0.5), Err(DatasetError::UnknownResponder(_))));
        m.set("r", "g1", 0.75).unwrap();
        assert_eq!(m.get("r", "g1").unwrap(), Some(0.75));
        assert_eq!(m.coverage("r").unwrap(), 1);

        let text = "responder_id,headline_id,label\nr,g1,4\nr,g2,7\n";
        assert!(matches!(parse_responses(text, &c, LikelihoodScale::Likert), Err(DatasetError::Parse { line: 3, .. })));
    }

    #[test]
    fn profiles_parse() {
        let text = "responder_id,kind,benchmark_score\ngpt,llm,88.7\nh1,human,\n";
        let p = parse_profiles(text).unwrap();
        assert_eq!(p[0].benchmark_score, Some(88.7));
        assert_eq!(p[1].benchmark_score, None);
        assert_eq!(parse_profiles(&profiles_to_string(&p)).unwrap(), p);
        assert!(parse_profiles("responder_id,kind,benchmark_score\nx,llm,120\n").is_err());
    }

    proptest! {
        #[test]
        fn folds_are_pair_coupled(per_cell in 1usize..4, k in 2usize..6, seed in any::<u64>()) {
            let c = balanced(per_cell);
            let f = make_folds(&c, k, seed).unwrap();
            for i in 0..c.len() {
                prop_assert_eq!(f.fold_of_index(i), f.fold_of_index(c.partner_index(i)));
            }
            let sizes = f.fold_sizes();
            prop_assert!(sizes.iter().max().unwrap() - sizes.iter().min().unwrap() <= 2);
        }

        #[test]
        fn corpus_round_trips(per_cell in 1usize..3, json in any::<bool>()) {
            let c = balanced(per_cell);
            let fmt = if json { FileFormat::Json } else { FileFormat::Csv };
            let back = parse_corpus(&corpus_to_string(&c, fmt), fmt).unwrap();
            prop_assert_eq!(back, c);
        }
    }
}
