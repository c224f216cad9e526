//! Client for an HTTP `/embeddings` endpoint.

use std::sync::atomic::{AtomicUsize, Ordering};
use std::thread;
use std::time::Duration;

use serde::{Deserialize, Serialize};

use super::{content_hash, EmbeddingProvider, EmbeddingVector, ProviderConfig};
use crate::{Error, Result};

#[derive(Serialize)]
struct EmbeddingRequest<'a> {
    model: &'a str,
    input: &'a [String],
}

#[derive(Deserialize)]
struct EmbeddingResponse {
    data: Vec<EmbeddingDatum>,
}

#[derive(Deserialize)]
struct EmbeddingDatum {
    index: usize,
    embedding: Vec<f64>,
}

pub struct RemoteProvider {
    agent: ureq::Agent,
    endpoint: String,
    model_id: String,
    api_key: String,
    batch_size: usize,
    max_retries: u32,
    backoff_base_ms: u64,
    max_parallel: usize,
    requests: AtomicUsize,
    retries: AtomicUsize,
}

impl RemoteProvider {
    pub fn from_config(config: &ProviderConfig) -> Result<Self> {
        let base = config
            .base_url
            .as_deref()
            .ok_or_else(|| Error::Config("remote provider requires base_url".into()))?;
        let var = config
            .api_key_env
            .as_deref()
            .ok_or_else(|| Error::Config("remote provider requires api_key_env".into()))?;
        let api_key = std::env::var(var)
            .map_err(|_| Error::Config(format!("environment variable {var} is not set")))?;
        Ok(Self::new(base, &config.model_id, api_key, config))
    }

    pub fn new(base_url: &str, model_id: &str, api_key: String, config: &ProviderConfig) -> Self {
        let agent: ureq::Agent = ureq::Agent::config_builder()
            .http_status_as_error(false)
            .timeout_global(Some(Duration::from_secs(120)))
            .build()
            .into();
        Self {
            agent,
            endpoint: format!("{}/embeddings", base_url.trim_end_matches('/')),
            model_id: model_id.to_string(),
            api_key,
            batch_size: config.batch_size.max(1),
            max_retries: config.max_retries,
            backoff_base_ms: config.backoff_base_ms,
            max_parallel: config.max_parallel_requests.max(1),
            requests: AtomicUsize::new(0),
            retries: AtomicUsize::new(0),
        }
    }

    /// Retries performed so far across all requests.
    pub fn retries(&self) -> usize {
        self.retries.load(Ordering::Relaxed)
    }

    fn provider_error(status: Option<u16>, texts: &[String], message: String) -> Error {
        Error::Provider { status, text_hash: content_hash(&texts[0]), message }
    }

    fn request_chunk(&self, texts: &[String]) -> Result<Vec<Vec<f64>>> {
        let body = EmbeddingRequest { model: &self.model_id, input: texts };
        let mut attempt = 0u32;
        loop {
            self.requests.fetch_add(1, Ordering::Relaxed);
            let sent = self
                .agent
                .post(&self.endpoint)
                .header("Authorization", &format!("Bearer {}", self.api_key))
                .send_json(&body);
            let (status, retryable, message) = match sent {
                Ok(mut resp) => {
                    let status = resp.status().as_u16();
                    if status == 200 {
                        let parsed: EmbeddingResponse = resp
                            .body_mut()
                            .read_json()
                            .map_err(|e| Self::provider_error(Some(status), texts, format!("bad response body: {e}")))?;
                        return Self::reorder(parsed, texts);
                    }
                    let text = resp.body_mut().read_to_string().unwrap_or_default();
                    (Some(status), status == 429 || status >= 500, text)
                }
                Err(e) => (None, true, e.to_string()),
            };
            if !retryable || attempt >= self.max_retries {
                return Err(Self::provider_error(status, texts, message));
            }
            let wait = self.backoff_base_ms.saturating_mul(1u64 << attempt.min(16));
            log::warn!("embedding request failed (status {status:?}); retry {} in {wait} ms", attempt + 1);
            self.retries.fetch_add(1, Ordering::Relaxed);
            thread::sleep(Duration::from_millis(wait));
            attempt += 1;
        }
    }

    fn reorder(resp: EmbeddingResponse, texts: &[String]) -> Result<Vec<Vec<f64>>> {
        let mut slots: Vec<Option<Vec<f64>>> = vec![None; texts.len()];
        for d in resp.data {
            let slot = slots.get_mut(d.index).ok_or_else(|| {
                Error::Integrity(format!("response index {} out of range", d.index))
            })?;
            *slot = Some(d.embedding);
        }
        slots
            .into_iter()
            .enumerate()
            .map(|(i, s)| {
                s.ok_or_else(|| Error::Integrity(format!("no embedding for text {}", content_hash(&texts[i]))))
            })
            .collect()
    }
}

impl EmbeddingProvider for RemoteProvider {
    fn provider_id(&self) -> &str {
        &self.endpoint
    }

    fn model_id(&self) -> &str {
        &self.model_id
    }

    fn embed_batch(&self, texts: &[String]) -> Result<Vec<EmbeddingVector>> {
        let chunks: Vec<&[String]> = texts.chunks(self.batch_size).collect();
        let mut results: Vec<Option<Result<Vec<Vec<f64>>>>> = (0..chunks.len()).map(|_| None).collect();
        for (group_idx, group) in chunks.chunks(self.max_parallel).enumerate() {
            let outcomes: Vec<Result<Vec<Vec<f64>>>> = thread::scope(|s| {
                let handles: Vec<_> = group.iter().map(|c| s.spawn(|| self.request_chunk(c))).collect();
                handles.into_iter().map(|h| h.join().expect("request thread panicked")).collect()
            });
            for (i, o) in outcomes.into_iter().enumerate() {
                results[group_idx * self.max_parallel + i] = Some(o);
            }
        }
        let mut out = Vec::with_capacity(texts.len());
        for r in results {
            for values in r.expect("every chunk requested")? {
                out.push(EmbeddingVector {
                    values,
                    provider_id: self.endpoint.clone(),
                    model_id: self.model_id.clone(),
                });
            }
        }
        Ok(out)
    }

    fn requests(&self) -> usize {
        self.requests.load(Ordering::Relaxed)
    }
}
