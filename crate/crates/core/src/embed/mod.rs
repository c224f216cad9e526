//! Text embedding providers behind one contract, plus a persistent cache.
//!
//! [`RemoteProvider`] talks to any host exposing the common `/embeddings`
//! endpoint; [`LocalProvider`] averages word vectors from a text file and is
//! fully deterministic. [`CachedEmbedder`] memoizes either one in memory and
//! on disk, keyed by provider, model, repeat index and text hash.

mod cache;
mod local;
mod remote;

use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

pub use cache::{CacheEntry, CachedEmbedder, EmbedStats, EmbeddingCache};
pub use local::LocalProvider;
pub use remote::RemoteProvider;

use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmbeddingVector {
    pub values: Vec<f64>,
    pub provider_id: String,
    pub model_id: String,
}

impl EmbeddingVector {
    pub fn dimension(&self) -> usize {
        self.values.len()
    }

    pub fn norm(&self) -> f64 {
        self.values.iter().map(|x| x * x).sum::<f64>().sqrt()
    }
}

pub fn cosine_values(u: &[f64], v: &[f64]) -> Result<f64> {
    if u.len() != v.len() {
        return Err(Error::Integrity(format!("dimension mismatch {} vs {}", u.len(), v.len())));
    }
    let (mut dot, mut nu, mut nv) = (0.0, 0.0, 0.0);
    for (a, b) in u.iter().zip(v) {
        dot += a * b;
        nu += a * a;
        nv += b * b;
    }
    if nu == 0.0 || nv == 0.0 {
        return Err(Error::Integrity("zero-norm vector".into()));
    }
    Ok((dot / (nu.sqrt() * nv.sqrt())).clamp(-1.0, 1.0))
}

pub fn cosine(u: &EmbeddingVector, v: &EmbeddingVector) -> Result<f64> {
    cosine_values(&u.values, &v.values)
}

/// Hex SHA-256 of a text.
pub fn content_hash(text: &str) -> String {
    hex::encode(Sha256::digest(text.as_bytes()))
}

pub trait EmbeddingProvider: Send + Sync {
    fn provider_id(&self) -> &str;
    fn model_id(&self) -> &str;
    /// One vector per text, in input order.
    fn embed_batch(&self, texts: &[String]) -> Result<Vec<EmbeddingVector>>;
    /// Requests issued so far (HTTP calls for remote providers, batch calls
    /// for local ones).
    fn requests(&self) -> usize;
}

/// Validates inputs and outputs around a provider call.
pub fn embed_batch(provider: &dyn EmbeddingProvider, texts: &[String]) -> Result<Vec<EmbeddingVector>> {
    if texts.is_empty() {
        return Err(Error::Invalid("embed_batch needs at least one text".into()));
    }
    if let Some(t) = texts.iter().find(|t| t.trim().is_empty()) {
        return Err(Error::Invalid(format!("blank text (hash {})", content_hash(t))));
    }
    let out = provider.embed_batch(texts)?;
    if out.len() != texts.len() {
        return Err(Error::Integrity(format!("{} vectors for {} texts", out.len(), texts.len())));
    }
    let dim = out[0].dimension();
    if dim < 2 {
        return Err(Error::Integrity(format!("dimension {dim} < 2")));
    }
    for (v, t) in out.iter().zip(texts) {
        if v.dimension() != dim {
            return Err(Error::Integrity(format!(
                "dimension {} != {dim} for text {}",
                v.dimension(),
                content_hash(t)
            )));
        }
        if v.values.iter().any(|x| !x.is_finite()) {
            return Err(Error::Integrity(format!("non-finite value for text {}", content_hash(t))));
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ProviderKind {
    Remote,
    Local,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ProviderConfig {
    pub kind: ProviderKind,
    pub base_url: Option<String>,
    #[serde(skip_serializing_if = "String::is_empty")]
    pub model_id: String,
    pub api_key_env: Option<String>,
    pub batch_size: usize,
    pub max_retries: u32,
    pub backoff_base_ms: u64,
    pub max_parallel_requests: usize,
    pub cache_dir: Option<PathBuf>,
    /// Word-vector file for the local provider.
    pub vector_file: Option<PathBuf>,
}

impl Default for ProviderConfig {
    fn default() -> Self {
        Self {
            kind: ProviderKind::Local,
            base_url: None,
            model_id: String::new(),
            api_key_env: Some("EMBEDDING_API_KEY".into()),
            batch_size: 64,
            max_retries: 5,
            backoff_base_ms: 500,
            max_parallel_requests: 4,
            cache_dir: None,
            vector_file: None,
        }
    }
}

impl ProviderConfig {
    pub fn validate(&self) -> Result<()> {
        if self.batch_size == 0 {
            return Err(Error::Config("batch_size must be at least 1".into()));
        }
        if self.max_parallel_requests == 0 {
            return Err(Error::Config("max_parallel_requests must be at least 1".into()));
        }
        match self.kind {
            ProviderKind::Remote => {
                if self.base_url.is_none() {
                    return Err(Error::Config("remote provider requires base_url".into()));
                }
                if self.model_id.is_empty() {
                    return Err(Error::Config("remote provider requires model_id".into()));
                }
                if self.api_key_env.is_none() {
                    return Err(Error::Config("remote provider requires api_key_env".into()));
                }
            }
            ProviderKind::Local => {
                if self.vector_file.is_none() {
                    return Err(Error::Config("local provider requires vector_file".into()));
                }
            }
        }
        Ok(())
    }

    pub fn build(&self) -> Result<Box<dyn EmbeddingProvider>> {
        self.validate()?;
        Ok(match self.kind {
            ProviderKind::Remote => Box::new(RemoteProvider::from_config(self)?),
            ProviderKind::Local => Box::new(LocalProvider::load(self.vector_file.as_ref().unwrap())?),
        })
    }
}
