use std::path::PathBuf;

use super::cache::{CacheEntry, CacheMode, PromptCache, ENV_CACHE_DIR};
use crate::adaptation::{build_nlv_prompt, templates, ChatClient, NlvScorer, NLV_LABELS};
use crate::error::{Error, Result};
use crate::probdist::ProbVector;

/// Verification-task scorer backed by the response cache and, optionally,
/// a remote model.
#[derive(Debug)]
pub struct NlvProvider {
    cache: PromptCache,
    mode: CacheMode,
    model: String,
    client: Option<ChatClient>,
}

impl NlvProvider {
    /// Cache-only provider: never touches the network.
    pub fn cache_only(cache: PromptCache, model: impl Into<String>) -> Self {
        NlvProvider { cache, mode: CacheMode::CacheOnly, model: model.into(), client: None }
    }

    /// Cache in front of `client`; the cache key uses the client's model id.
    pub fn remote(cache: PromptCache, client: ChatClient) -> Self {
        NlvProvider {
            cache,
            mode: CacheMode::RemoteThenCache,
            model: client.model().to_string(),
            client: Some(client),
        }
    }

    pub fn mode(&self) -> CacheMode {
        self.mode
    }

    /// Cache directory from `GAT_CACHE_DIR`, if set.
    pub fn cache_dir_from_env() -> Option<PathBuf> {
        std::env::var_os(ENV_CACHE_DIR).filter(|v| !v.is_empty()).map(PathBuf::from)
    }

    pub fn key_for(&self, context: &str, statement: &str) -> String {
        PromptCache::key(templates::NLV.id, &build_nlv_prompt(context, statement), &self.model)
    }

    /// Stores a distribution for a statement, as a fixture would.
    pub fn seed_entry(&self, context: &str, statement: &str, masses: Vec<f64>) -> Result<()> {
        let prompt = build_nlv_prompt(context, statement);
        self.cache.put(&CacheEntry {
            key: PromptCache::key(templates::NLV.id, &prompt, &self.model),
            template_id: templates::NLV.id.into(),
            model: self.model.clone(),
            prompt,
            masses,
            text: None,
        })
    }
}

impl NlvScorer for NlvProvider {
    fn nlv_dist(&self, context: &str, statement: &str) -> Result<ProbVector> {
        let prompt = build_nlv_prompt(context, statement);
        let key = PromptCache::key(templates::NLV.id, &prompt, &self.model);
        let entry = self.cache.get_or_fetch(&key, self.mode, || {
            let client = self
                .client
                .as_ref()
                .ok_or_else(|| Error::BadConfig("remote mode without a client".into()))?;
            let (masses, text) = client.label_masses(&prompt, &NLV_LABELS)?;
            Ok(CacheEntry {
                key: key.clone(),
                template_id: templates::NLV.id.into(),
                model: self.model.clone(),
                prompt: prompt.clone(),
                masses,
                text,
            })
        })?;
        if entry.masses.len() != 2 {
            return Err(Error::DimensionMismatch(entry.masses.len(), 2));
        }
        ProbVector::normalize(&entry.masses)
    }
}
