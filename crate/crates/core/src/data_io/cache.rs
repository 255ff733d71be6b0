use std::collections::HashMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, Mutex};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

/// Environment variable naming the on-disk response cache directory.
pub const ENV_CACHE_DIR: &str = "GAT_CACHE_DIR";

/// How a provider may obtain a model response.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CacheMode {
    /// Serve from the cache; a miss is an error and no network call is made.
    CacheOnly,
    /// Serve from the cache, falling back to the remote model and storing
    /// the result.
    RemoteThenCache,
}

/// A stored model response.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CacheEntry {
    pub key: String,
    pub template_id: String,
    pub model: String,
    pub prompt: String,
    pub masses: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub text: Option<String>,
}

/// Content-addressed response store: one JSON file per key.
///
/// Reads are lock-free. Writes go to a temporary file that is renamed into
/// place, so readers never observe a partial entry.
#[derive(Debug)]
pub struct PromptCache {
    dir: PathBuf,
    key_locks: Mutex<HashMap<String, Arc<Mutex<()>>>>,
}

static TMP_COUNTER: AtomicU64 = AtomicU64::new(0);

impl PromptCache {
    pub fn open(dir: impl Into<PathBuf>) -> Result<Self> {
        let dir = dir.into();
        fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
        Ok(PromptCache { dir, key_locks: Mutex::new(HashMap::new()) })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn key(template_id: &str, prompt: &str, model: &str) -> String {
        let mut h = Sha256::new();
        for part in [template_id, prompt, model] {
            h.update((part.len() as u64).to_le_bytes());
            h.update(part.as_bytes());
        }
        hex::encode(h.finalize())
    }

    fn path_for(&self, key: &str) -> PathBuf {
        self.dir.join(format!("{key}.json"))
    }

    pub fn get(&self, key: &str) -> Result<Option<CacheEntry>> {
        let path = self.path_for(key);
        match fs::read(&path) {
            Ok(bytes) => Ok(Some(serde_json::from_slice(&bytes)?)),
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => Ok(None),
            Err(e) => Err(Error::io(path, e)),
        }
    }

    pub fn put(&self, entry: &CacheEntry) -> Result<()> {
        let path = self.path_for(&entry.key);
        let tmp = self.dir.join(format!(
            ".{}.{}.{}.tmp",
            entry.key,
            std::process::id(),
            TMP_COUNTER.fetch_add(1, Ordering::Relaxed)
        ));
        let bytes = serde_json::to_vec_pretty(entry)?;
        fs::write(&tmp, bytes).map_err(|e| Error::io(&tmp, e))?;
        fs::rename(&tmp, &path).map_err(|e| Error::io(&path, e))
    }

    /// Looks `key` up, calling `fetch` on a miss when `mode` allows it.
    /// Concurrent callers with the same key share one fetch.
    pub fn get_or_fetch<F>(&self, key: &str, mode: CacheMode, fetch: F) -> Result<CacheEntry>
    where
        F: FnOnce() -> Result<CacheEntry>,
    {
        if let Some(e) = self.get(key)? {
            return Ok(e);
        }
        if mode == CacheMode::CacheOnly {
            return Err(Error::CacheMiss(key.to_string()));
        }
        let lock = {
            let mut locks = self.key_locks.lock().unwrap_or_else(|p| p.into_inner());
            locks.entry(key.to_string()).or_default().clone()
        };
        let _guard = lock.lock().unwrap_or_else(|p| p.into_inner());
        if let Some(e) = self.get(key)? {
            return Ok(e);
        }
        let entry = fetch()?;
        self.put(&entry)?;
        Ok(entry)
    }
}
