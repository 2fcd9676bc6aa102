use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicBool, AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::{Duration, Instant, SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};

use super::{
    build_prompt, parse_response, AdapterSpec, ChatEndpoint, ChatRequest, ElicitError, ElicitationCache,
    ElicitationRecord, ParsedResponse, PromptTemplate,
};
use crate::dataset::{likert_to_likelihood, Corpus, LikelihoodScale, ResponseMatrix};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ElicitationConfig {
    pub endpoint_url: String,
    pub model_name: String,
    /// Must be 0.
    pub temperature: f64,
    /// Re-queries allowed after the first attempt, for refusals and
    /// transport failures alike.
    pub max_retries: u32,
    pub cache_path: PathBuf,
    /// Requests per second across all workers; unlimited when absent.
    pub request_rate_limit: Option<f64>,
    pub max_in_flight: usize,
    /// Seed for few-shot example selection.
    pub seed: u64,
    /// Base delay before retrying a failed request; doubles per attempt.
    pub retry_backoff_ms: u64,
    /// Optional adapter description file (JSON or TOML).
    pub adapter: Option<PathBuf>,
}

impl Default for ElicitationConfig {
    fn default() -> Self {
        ElicitationConfig {
            endpoint_url: String::new(),
            model_name: String::new(),
            temperature: 0.0,
            max_retries: 3,
            cache_path: PathBuf::from("elicitation_cache.jsonl"),
            request_rate_limit: None,
            max_in_flight: 4,
            seed: 0,
            retry_backoff_ms: 500,
            adapter: None,
        }
    }
}

impl ElicitationConfig {
    fn validate(&self) -> Result<(), ElicitError> {
        if self.temperature != 0.0 {
            return Err(ElicitError::Config("temperature is fixed at 0".into()));
        }
        if self.model_name.is_empty() {
            return Err(ElicitError::Config("model_name is empty".into()));
        }
        if self.max_in_flight == 0 {
            return Err(ElicitError::Config("max_in_flight must be at least 1".into()));
        }
        if self.request_rate_limit.is_some_and(|r| r.is_nan() || r <= 0.0) {
            return Err(ElicitError::Config("request_rate_limit must be positive".into()));
        }
        Ok(())
    }

    /// The adapter file if configured (relative to `base`), else the
    /// OpenAI-compatible default; `endpoint_url` overrides the file's url.
    pub fn load_adapter(&self, base: &Path) -> Result<AdapterSpec, ElicitError> {
        let mut adapter = match &self.adapter {
            Some(p) => {
                let path = base.join(p);
                let text = std::fs::read_to_string(&path).map_err(|source| ElicitError::Io {
                    path: path.display().to_string(),
                    source,
                })?;
                if path.extension().is_some_and(|e| e == "json") {
                    serde_json::from_str(&text).map_err(|e| ElicitError::Config(e.to_string()))?
                } else {
                    toml::from_str(&text).map_err(|e| ElicitError::Config(e.to_string()))?
                }
            }
            None => AdapterSpec::default(),
        };
        if !self.endpoint_url.is_empty() {
            adapter.url = self.endpoint_url.clone();
        }
        if adapter.url.is_empty() {
            return Err(ElicitError::Config("no endpoint url".into()));
        }
        Ok(adapter)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ElicitationOutcome {
    /// One single-row matrix (the model) per target word.
    pub matrices: BTreeMap<String, ResponseMatrix>,
    /// Endpoint calls issued during this run.
    pub requests: usize,
    /// Records that stayed refusals after all retries.
    pub refusals: usize,
}

struct Job {
    headline_id: String,
    target: String,
    prompt: String,
}

struct Limiter {
    interval: Option<Duration>,
    next: Mutex<Instant>,
}

impl Limiter {
    fn wait(&self) {
        let Some(interval) = self.interval else { return };
        let slot = {
            let mut next = self.next.lock().expect("limiter lock");
            let slot = (*next).max(Instant::now());
            *next = slot + interval;
            slot
        };
        let now = Instant::now();
        if slot > now {
            std::thread::sleep(slot - now);
        }
    }
}

fn unix_now() -> u64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs())
}

fn query(
    job: &Job,
    config: &ElicitationConfig,
    endpoint: &dyn ChatEndpoint,
    limiter: &Limiter,
    requests: &AtomicUsize,
) -> Result<ElicitationRecord, ElicitError> {
    let request = ChatRequest::user(&config.model_name, job.prompt.clone());
    let mut attempts = 0u32;
    loop {
        attempts += 1;
        limiter.wait();
        requests.fetch_add(1, Ordering::SeqCst);
        let exhausted = attempts > config.max_retries;
        match endpoint.complete(&request) {
            Ok(text) => {
                let parsed = parse_response(&text);
                if parsed != ParsedResponse::Refusal || exhausted {
                    return Ok(ElicitationRecord {
                        model_name: config.model_name.clone(),
                        headline_id: job.headline_id.clone(),
                        target_str: job.target.clone(),
                        raw_response: text,
                        parsed_label: parsed.label(),
                        refusal: parsed == ParsedResponse::Refusal,
                        timestamp: unix_now(),
                        attempts,
                    });
                }
            }
            Err(e) if exhausted => {
                return Err(ElicitError::EndpointError {
                    attempts,
                    message: e.message,
                })
            }
            Err(_) => {
                let backoff = config.retry_backoff_ms.saturating_mul(1 << (attempts - 1).min(10));
                std::thread::sleep(Duration::from_millis(backoff));
            }
        }
    }
}

/// Elicits one likelihood per (headline, target word), reusing cached
/// records and persisting new ones as they arrive.
pub fn elicit_all(
    config: &ElicitationConfig,
    endpoint: &dyn ChatEndpoint,
    corpus: &Corpus,
    target_variants: &[String],
) -> Result<ElicitationOutcome, ElicitError> {
    config.validate()?;
    let cache = ElicitationCache::open(&config.cache_path)?;

    let mut jobs = Vec::new();
    for target in target_variants {
        let template = PromptTemplate::new(target.clone());
        for h in corpus.headlines() {
            if cache.get(&config.model_name, &h.id, target).is_none() {
                jobs.push(Job {
                    headline_id: h.id.clone(),
                    target: target.clone(),
                    prompt: build_prompt(corpus, h, &template, config.seed)?,
                });
            }
        }
    }

    let limiter = Limiter {
        interval: config.request_rate_limit.map(|r| Duration::from_secs_f64(1.0 / r)),
        next: Mutex::new(Instant::now()),
    };
    let requests = AtomicUsize::new(0);
    let next_job = AtomicUsize::new(0);
    let stop = AtomicBool::new(false);
    let failure: Mutex<Option<ElicitError>> = Mutex::new(None);
    let workers = config.max_in_flight.min(jobs.len());
    std::thread::scope(|s| {
        for _ in 0..workers {
            s.spawn(|| {
                while !stop.load(Ordering::SeqCst) {
                    let i = next_job.fetch_add(1, Ordering::SeqCst);
                    let Some(job) = jobs.get(i) else { break };
                    let result = query(job, config, endpoint, &limiter, &requests).and_then(|r| cache.insert(r));
                    if let Err(e) = result {
                        stop.store(true, Ordering::SeqCst);
                        failure.lock().expect("failure lock").get_or_insert(e);
                    }
                }
            });
        }
    });
    if let Some(e) = failure.into_inner().expect("failure lock") {
        return Err(e);
    }

    let mut matrices = BTreeMap::new();
    let mut refusals = 0;
    for target in target_variants {
        let mut row = Vec::with_capacity(corpus.len());
        for h in corpus.headlines() {
            let rec = cache
                .get(&config.model_name, &h.id, target)
                .expect("every job was cached or failed");
            refusals += usize::from(rec.refusal);
            row.push(match rec.parsed_label {
                Some(l) => Some(likert_to_likelihood(i64::from(l))?),
                None => None,
            });
        }
        let mut m = ResponseMatrix::new(corpus, LikelihoodScale::Likert);
        m.push_row(config.model_name.clone(), row)?;
        matrices.insert(target.clone(), m);
    }
    Ok(ElicitationOutcome {
        matrices,
        requests: requests.into_inner(),
        refusals,
    })
}
