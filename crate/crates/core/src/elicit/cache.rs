use std::collections::HashMap;
use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::sync::Mutex;

use serde::{Deserialize, Serialize};

use super::ElicitError;

/// One elicited answer, final after retries.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ElicitationRecord {
    pub model_name: String,
    pub headline_id: String,
    pub target_str: String,
    pub raw_response: String,
    /// `None` exactly when `refusal` is set.
    pub parsed_label: Option<u8>,
    pub refusal: bool,
    /// Unix seconds.
    pub timestamp: u64,
    pub attempts: u32,
}

impl ElicitationRecord {
    pub fn key(&self) -> (String, String, String) {
        (self.model_name.clone(), self.headline_id.clone(), self.target_str.clone())
    }
}

/// Append-only JSON-lines cache keyed by (model, headline, target word).
/// Appends are serialized through a mutex and flushed per record.
#[derive(Debug)]
pub struct ElicitationCache {
    path: PathBuf,
    records: Mutex<HashMap<(String, String, String), ElicitationRecord>>,
    file: Mutex<File>,
}

impl ElicitationCache {
    /// Opens (creating if needed) and loads the cache at `path`.
    pub fn open(path: impl AsRef<Path>) -> Result<Self, ElicitError> {
        let path = path.as_ref().to_path_buf();
        let io = |source| ElicitError::Io {
            path: path.display().to_string(),
            source,
        };
        let mut records = HashMap::new();
        if path.exists() {
            let reader = BufReader::new(File::open(&path).map_err(io)?);
            for (n, line) in reader.lines().enumerate() {
                let line = line.map_err(io)?;
                if line.trim().is_empty() {
                    continue;
                }
                let rec: ElicitationRecord = serde_json::from_str(&line).map_err(|e| ElicitError::CacheCorrupt {
                    line: n + 1,
                    message: e.to_string(),
                })?;
                if rec.parsed_label.is_some() == rec.refusal || rec.parsed_label.is_some_and(|l| !(1..=5).contains(&l)) {
                    return Err(ElicitError::CacheCorrupt {
                        line: n + 1,
                        message: "label and refusal flag disagree".into(),
                    });
                }
                records.insert(rec.key(), rec);
            }
        }
        let file = OpenOptions::new().create(true).append(true).open(&path).map_err(io)?;
        Ok(ElicitationCache {
            path,
            records: Mutex::new(records),
            file: Mutex::new(file),
        })
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    pub fn get(&self, model: &str, headline_id: &str, target_str: &str) -> Option<ElicitationRecord> {
        self.records
            .lock()
            .expect("cache lock")
            .get(&(model.to_string(), headline_id.to_string(), target_str.to_string()))
            .cloned()
    }

    pub fn len(&self) -> usize {
        self.records.lock().expect("cache lock").len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Persists a record unless its key is already cached.
    pub fn insert(&self, record: ElicitationRecord) -> Result<(), ElicitError> {
        let mut records = self.records.lock().expect("cache lock");
        if records.contains_key(&record.key()) {
            return Ok(());
        }
        let line = serde_json::to_string(&record).expect("record serializes");
        let mut file = self.file.lock().expect("cache file lock");
        writeln!(file, "{line}")
            .and_then(|_| file.flush())
            .map_err(|source| ElicitError::Io {
                path: self.path.display().to_string(),
                source,
            })?;
        records.insert(record.key(), record);
        Ok(())
    }
}
