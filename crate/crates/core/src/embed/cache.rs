//! Content-addressed embedding cache.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::{content_hash, embed_batch, EmbeddingProvider, EmbeddingVector};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CacheEntry {
    pub dimension: usize,
    pub values: Vec<f64>,
    pub provider_id: String,
    pub model_id: String,
    pub repeat_index: u32,
    pub created_at: u64,
}

/// One JSON file per key under a directory.
#[derive(Debug, Clone)]
pub struct EmbeddingCache {
    dir: PathBuf,
}

impl EmbeddingCache {
    pub fn open(dir: impl Into<PathBuf>) -> Result<Self> {
        let dir = dir.into();
        std::fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
        Ok(Self { dir })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn key(provider_id: &str, model_id: &str, repeat_index: u32, text: &str) -> String {
        let mut h = Sha256::new();
        for part in [provider_id, model_id, &repeat_index.to_string(), &content_hash(text)] {
            h.update(part.as_bytes());
            h.update([0u8]);
        }
        hex::encode(h.finalize())
    }

    fn path(&self, key: &str) -> PathBuf {
        self.dir.join(format!("{key}.json"))
    }

    /// Returns the cached values, discarding entries that fail to parse or
    /// do not match the key.
    pub fn get(&self, provider_id: &str, model_id: &str, repeat_index: u32, text: &str) -> Option<Vec<f64>> {
        let path = self.path(&Self::key(provider_id, model_id, repeat_index, text));
        let raw = std::fs::read(&path).ok()?;
        let entry: Option<CacheEntry> = serde_json::from_slice(&raw).ok();
        match entry {
            Some(e)
                if e.dimension == e.values.len()
                    && e.provider_id == provider_id
                    && e.model_id == model_id
                    && e.repeat_index == repeat_index
                    && e.values.iter().all(|x| x.is_finite()) =>
            {
                Some(e.values)
            }
            _ => {
                log::warn!("discarding corrupt cache entry {}", path.display());
                let _ = std::fs::remove_file(&path);
                None
            }
        }
    }

    pub fn put(&self, provider_id: &str, model_id: &str, repeat_index: u32, text: &str, values: &[f64]) -> Result<()> {
        let key = Self::key(provider_id, model_id, repeat_index, text);
        let entry = CacheEntry {
            dimension: values.len(),
            values: values.to_vec(),
            provider_id: provider_id.to_string(),
            model_id: model_id.to_string(),
            repeat_index,
            created_at: SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs()),
        };
        let path = self.path(&key);
        // write-then-rename so concurrent readers never see a partial file
        let tmp = self.dir.join(format!(".{key}.{}.tmp", std::process::id()));
        std::fs::write(&tmp, serde_json::to_vec(&entry)?).map_err(|e| Error::io(&tmp, e))?;
        std::fs::rename(&tmp, &path).map_err(|e| Error::io(&path, e))?;
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct EmbedStats {
    pub memory_hits: usize,
    pub disk_hits: usize,
    pub misses: usize,
    pub provider_requests: usize,
}

/// Memoizing front for a provider: in-process map, then disk cache, then
/// the provider itself.
pub struct CachedEmbedder {
    provider: Box<dyn EmbeddingProvider>,
    cache: Option<EmbeddingCache>,
    memo: Mutex<HashMap<(u32, String), Vec<f64>>>,
    memory_hits: AtomicUsize,
    disk_hits: AtomicUsize,
    misses: AtomicUsize,
}

impl CachedEmbedder {
    pub fn new(provider: Box<dyn EmbeddingProvider>, cache: Option<EmbeddingCache>) -> Self {
        Self {
            provider,
            cache,
            memo: Mutex::new(HashMap::new()),
            memory_hits: AtomicUsize::new(0),
            disk_hits: AtomicUsize::new(0),
            misses: AtomicUsize::new(0),
        }
    }

    pub fn provider(&self) -> &dyn EmbeddingProvider {
        self.provider.as_ref()
    }

    pub fn stats(&self) -> EmbedStats {
        EmbedStats {
            memory_hits: self.memory_hits.load(Ordering::Relaxed),
            disk_hits: self.disk_hits.load(Ordering::Relaxed),
            misses: self.misses.load(Ordering::Relaxed),
            provider_requests: self.provider.requests(),
        }
    }

    /// Embeds `texts` under `repeat_index`; misses go to the provider in a
    /// single batch call.
    pub fn embed(&self, texts: &[String], repeat_index: u32) -> Result<Vec<EmbeddingVector>> {
        let pid = self.provider.provider_id().to_string();
        let mid = self.provider.model_id().to_string();
        let mut found: BTreeMap<&str, Vec<f64>> = BTreeMap::new();
        let mut missing: Vec<String> = Vec::new();
        let mut seen: HashSet<&str> = HashSet::new();
        let mut disk: Vec<(String, Vec<f64>)> = Vec::new();
        {
            let memo = self.memo.lock().unwrap();
            for t in texts {
                if !seen.insert(t.as_str()) {
                    continue;
                }
                if let Some(v) = memo.get(&(repeat_index, t.clone())) {
                    self.memory_hits.fetch_add(1, Ordering::Relaxed);
                    found.insert(t, v.clone());
                } else if let Some(v) = self.cache.as_ref().and_then(|c| c.get(&pid, &mid, repeat_index, t)) {
                    self.disk_hits.fetch_add(1, Ordering::Relaxed);
                    disk.push((t.clone(), v.clone()));
                    found.insert(t, v);
                } else {
                    missing.push(t.clone());
                }
            }
        }
        if !missing.is_empty() {
            self.misses.fetch_add(missing.len(), Ordering::Relaxed);
            let fetched = embed_batch(self.provider.as_ref(), &missing)?;
            if let Some(dim) = found.values().next().map(Vec::len) {
                if fetched[0].dimension() != dim {
                    return Err(Error::Integrity(format!(
                        "provider dimension {} differs from cached dimension {dim}",
                        fetched[0].dimension()
                    )));
                }
            }
            for (t, v) in missing.iter().zip(&fetched) {
                if let Some(cache) = &self.cache {
                    cache.put(&pid, &mid, repeat_index, t, &v.values)?;
                }
            }
            let mut memo = self.memo.lock().unwrap();
            for (t, v) in missing.iter().zip(fetched) {
                memo.insert((repeat_index, t.clone()), v.values);
            }
        }
        let mut memo = self.memo.lock().unwrap();
        for (t, v) in disk {
            memo.insert((repeat_index, t), v);
        }
        texts
            .iter()
            .map(|t| {
                let values = match found.get(t.as_str()) {
                    Some(v) => v.clone(),
                    None => memo.get(&(repeat_index, t.clone())).cloned().expect("fetched above"),
                };
                Ok(EmbeddingVector { values, provider_id: pid.clone(), model_id: mid.clone() })
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::embed::LocalProvider;

    fn embedder(dir: Option<&Path>) -> CachedEmbedder {
        let p = LocalProvider::from_reader("going 1 0\nlike 0 1\n".as_bytes()).unwrap();
        CachedEmbedder::new(Box::new(p), dir.map(|d| EmbeddingCache::open(d).unwrap()))
    }

    #[test]
    fn same_text_twice_one_call() {
        let e = embedder(None);
        e.embed(&["going like".into(), "going like".into()], 0).unwrap();
        e.embed(&["going like".into()], 0).unwrap();
        assert_eq!(e.stats().provider_requests, 1);
        assert_eq!(e.stats().misses, 1);
    }

    #[test]
    fn persistent_across_instances() {
        let dir = tempfile::tempdir().unwrap();
        let a = embedder(Some(dir.path()));
        let first = a.embed(&["going".into(), "soup".into()], 0).unwrap();
        let b = embedder(Some(dir.path()));
        let second = b.embed(&["going".into(), "soup".into()], 0).unwrap();
        assert_eq!(b.stats().provider_requests, 0);
        assert_eq!(first, second);
    }

    #[test]
    fn repeat_indices_are_distinct_entries() {
        let dir = tempfile::tempdir().unwrap();
        let e = embedder(Some(dir.path()));
        for r in 0..3 {
            e.embed(&["going".into()], r).unwrap();
        }
        let files = std::fs::read_dir(dir.path()).unwrap().count();
        assert_eq!(files, 3);
        assert_eq!(e.stats().misses, 3);
    }

    #[test]
    fn corrupt_entry_refetched() {
        let dir = tempfile::tempdir().unwrap();
        let e = embedder(Some(dir.path()));
        e.embed(&["going".into()], 0).unwrap();
        let file = std::fs::read_dir(dir.path()).unwrap().next().unwrap().unwrap().path();
        std::fs::write(&file, b"{garbage").unwrap();
        let fresh = embedder(Some(dir.path()));
        let v = fresh.embed(&["going".into()], 0).unwrap();
        assert_eq!(v[0].values, vec![1.0, 0.0]);
        assert_eq!(fresh.stats().provider_requests, 1);
        let entry: CacheEntry = serde_json::from_slice(&std::fs::read(&file).unwrap()).unwrap();
        assert_eq!(entry.values, vec![1.0, 0.0]);
    }
}
