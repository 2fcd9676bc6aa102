//! Few-shot elicitation of headline likelihoods from chat-completion models.

mod cache;
mod endpoint;
mod run;

use std::fmt;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

pub use cache::{ElicitationCache, ElicitationRecord};
#[cfg(feature = "http")]
pub use endpoint::HttpEndpoint;
pub use endpoint::{AdapterSpec, ChatEndpoint, ChatMessage, ChatRequest, EndpointFailure};
pub use run::{elicit_all, ElicitationConfig, ElicitationOutcome};

use crate::dataset::{Corpus, Headline, Sentiment, Status};
use crate::rng::{derive_seed, hash_str, rng_from};

#[derive(Debug, thiserror::Error)]
pub enum ElicitError {
    #[error("headline `{id}`: fewer than 4 eligible examples in category {category}")]
    InsufficientExamples { id: String, category: String },
    #[error("prompt needs exactly {SHOT_COUNT} examples with labels, got {examples} and {labels}")]
    BadArity { examples: usize, labels: usize },
    #[error("endpoint failed after {attempts} attempts: {message}")]
    EndpointError { attempts: u32, message: String },
    #[error("corrupt cache at line {line}: {message}")]
    CacheCorrupt { line: usize, message: String },
    #[error("invalid config: {0}")]
    Config(String),
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Dataset(#[from] crate::dataset::DatasetError),
}

pub const SHOT_COUNT: usize = 4;
pub const DEFAULT_TARGET: &str = "true";
/// Target words of the prompt-variant sweep, original first.
pub const TARGET_VARIANTS: [&str; 6] = ["true", "real", "genuine", "fake", "false", "altered"];
const NEGATED_TARGETS: [&str; 3] = ["fake", "false", "altered"];

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PromptTemplate {
    pub target_str: String,
}

impl Default for PromptTemplate {
    fn default() -> Self {
        PromptTemplate::new(DEFAULT_TARGET)
    }
}

impl PromptTemplate {
    pub fn new(target_str: impl Into<String>) -> Self {
        PromptTemplate {
            target_str: target_str.into(),
        }
    }

    /// Whether the target word asks for disbelief ("fake", "false", ...).
    pub fn is_negated(&self) -> bool {
        NEGATED_TARGETS.contains(&self.target_str.as_str())
    }

    /// Label shown for an example: 5 when the headline is what the target
    /// word names, 1 otherwise.
    pub fn expected_label(&self, example: &Headline) -> u8 {
        if (example.status == Status::Genuine) != self.is_negated() {
            5
        } else {
            1
        }
    }

    pub fn render(&self, query: &Headline, examples: &[&Headline], labels: &[u8]) -> Result<String, ElicitError> {
        if examples.len() != SHOT_COUNT || labels.len() != SHOT_COUNT {
            return Err(ElicitError::BadArity {
                examples: examples.len(),
                labels: labels.len(),
            });
        }
        let mut out = format!(
            "How likely is it that this headline is {}.\n\n Choose one of the following options and return only the number of that option:\n1. very unlikely, 2. unlikely, 3. undecided, 4. likely, 5. very likely.\n\n<examples>\n",
            self.target_str
        );
        for (h, label) in examples.iter().zip(labels) {
            out.push_str(&format!("\"{}\"\nResponse: {}\n", h.text, label));
        }
        out.push_str(&format!("</examples>\n\n\"{}\"\nResponse: ", query.text));
        Ok(out)
    }
}

pub fn render_prompt(
    template: &PromptTemplate,
    query: &Headline,
    examples: &[&Headline],
    expected_labels: &[u8],
) -> Result<String, ElicitError> {
    template.render(query, examples, expected_labels)
}

/// Four same-category examples, one per (status, sentiment) cell, never the
/// query or its counterfactual partner. Deterministic in (seed, query id).
pub fn select_examples<'c>(corpus: &'c Corpus, query: &Headline, seed: u64) -> Result<Vec<&'c Headline>, ElicitError> {
    let mut rng = rng_from(derive_seed(seed, &[hash_str(&query.id)]));
    let mut picked = Vec::with_capacity(SHOT_COUNT);
    for status in Status::ALL {
        for sentiment in Sentiment::ALL {
            let pool: Vec<&Headline> = corpus
                .headlines()
                .iter()
                .filter(|h| {
                    h.category == query.category
                        && h.status == status
                        && h.sentiment == sentiment
                        && h.id != query.id
                        && h.id != query.partner_id
                })
                .collect();
            let choice = pool.choose(&mut rng).ok_or_else(|| ElicitError::InsufficientExamples {
                id: query.id.clone(),
                category: query.category.to_string(),
            })?;
            picked.push(*choice);
        }
    }
    picked.shuffle(&mut rng);
    Ok(picked)
}

/// The full prompt for one query: example selection plus rendering.
pub fn build_prompt(corpus: &Corpus, query: &Headline, template: &PromptTemplate, seed: u64) -> Result<String, ElicitError> {
    let examples = select_examples(corpus, query, seed)?;
    let labels: Vec<u8> = examples.iter().map(|h| template.expected_label(h)).collect();
    template.render(query, &examples, &labels)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ParsedResponse {
    Label(u8),
    Refusal,
}

impl ParsedResponse {
    pub fn label(self) -> Option<u8> {
        match self {
            ParsedResponse::Label(l) => Some(l),
            ParsedResponse::Refusal => None,
        }
    }
}

impl fmt::Display for ParsedResponse {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ParsedResponse::Label(l) => write!(f, "{l}"),
            ParsedResponse::Refusal => f.write_str("refusal"),
        }
    }
}

const DISCLAIMERS: [&str; 12] = [
    "as an ai",
    "language model",
    "i cannot",
    "i can't",
    "i can not",
    "i'm unable",
    "i am unable",
    "i'm not able",
    "i am not able",
    "i'm sorry",
    "i apologize",
    "cannot determine",
];

/// Leading noise a model may put before the number.
const PREFIXES: [&str; 5] = ["response:", "answer:", "option", "label:", "rating:"];

fn digit_at(chars: &[char], i: usize) -> Option<u8> {
    let c = *chars.get(i)?;
    if !('1'..='5').contains(&c) {
        return None;
    }
    let prev = i.checked_sub(1).map(|j| chars[j]);
    let next = chars.get(i + 1).copied();
    let after_next = chars.get(i + 2).copied();
    if prev.is_some_and(|p| p.is_ascii_digit() || p == '.' || p == ',' || p == '-' || p == '/') {
        return None;
    }
    if next.is_some_and(|n| n.is_ascii_digit()) {
        return None;
    }
    // decimals, ranges such as "1-5" and fractions such as "3/10", but "4/5" is an answer
    let out_of_five = next == Some('/') && after_next == Some('5') && !chars.get(i + 3).is_some_and(|d| d.is_ascii_digit());
    if matches!(next, Some('.' | ',' | '-' | '/')) && after_next.is_some_and(|a| a.is_ascii_digit()) && !out_of_five {
        return None;
    }
    let rest: String = chars[i + 1..].iter().take(4).collect::<String>().to_lowercase();
    if rest.starts_with(" to ") {
        return None;
    }
    let before: String = chars[..i].iter().collect::<String>().to_lowercase();
    if before.trim_end().ends_with(" to") {
        return None;
    }
    Some(c as u8 - b'0')
}

/// Extracts the 1-5 option from a completion. A leading number wins; failing
/// that, disclaimer text is a refusal; failing that, the first standalone
/// digit 1-5 in the text; digit-free text is a refusal.
pub fn parse_response(raw: &str) -> ParsedResponse {
    let mut s = raw.trim();
    loop {
        let before = s;
        s = s.trim_start_matches(|c: char| c.is_whitespace() || "\"'*`#([{<:".contains(c));
        let lower = s.to_lowercase();
        if let Some(p) = PREFIXES.iter().find(|p| lower.starts_with(*p)) {
            s = &s[p.len()..];
        }
        if s == before {
            break;
        }
    }
    let chars: Vec<char> = s.chars().collect();
    if let Some(l) = digit_at(&chars, 0) {
        return ParsedResponse::Label(l);
    }
    let lower = raw.to_lowercase();
    if DISCLAIMERS.iter().any(|d| lower.contains(d)) {
        return ParsedResponse::Refusal;
    }
    (0..chars.len())
        .find_map(|i| digit_at(&chars, i))
        .map_or(ParsedResponse::Refusal, ParsedResponse::Label)
}
