//! Deterministic word-vector provider.

use std::collections::HashMap;
use std::io::{BufRead, BufReader, Read};
use std::path::Path;
use std::sync::atomic::{AtomicUsize, Ordering};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

use super::{EmbeddingProvider, EmbeddingVector};
use crate::text::words;
use crate::{Error, Result};

/// Embeds a text as the mean of its tokens' vectors. Tokens missing from
/// the file get a unit vector seeded from a hash of the token.
#[derive(Debug)]
pub struct LocalProvider {
    vectors: HashMap<String, Vec<f64>>,
    dimension: usize,
    model_id: String,
    requests: AtomicUsize,
}

impl LocalProvider {
    pub fn load(path: &Path) -> Result<Self> {
        let f = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        Self::from_reader(f)
    }

    /// Parses `term v1 v2 ...` lines. The model id is derived from the file
    /// contents so cache keys change when the vectors do.
    pub fn from_reader<R: Read>(reader: R) -> Result<Self> {
        let mut vectors = HashMap::new();
        let mut dimension = None;
        let mut hasher = Sha256::new();
        for (lineno, line) in BufReader::new(reader).lines().enumerate() {
            let line = line.map_err(|e| Error::io("<vector file>", e))?;
            hasher.update(line.as_bytes());
            hasher.update(b"\n");
            let mut parts = line.split_whitespace();
            let Some(term) = parts.next() else { continue };
            let values = parts
                .map(|p| p.parse::<f64>())
                .collect::<std::result::Result<Vec<_>, _>>()
                .map_err(|e| Error::Parse {
                    field: format!("vector file line {}", lineno + 1),
                    message: e.to_string(),
                })?;
            match dimension {
                None => dimension = Some(values.len()),
                Some(d) if d != values.len() => {
                    return Err(Error::Parse {
                        field: format!("vector file line {}", lineno + 1),
                        message: format!("ragged row: {} values, expected {d}", values.len()),
                    })
                }
                _ => {}
            }
            if values.iter().any(|x| !x.is_finite()) {
                return Err(Error::Parse {
                    field: format!("vector file line {}", lineno + 1),
                    message: "non-finite value".into(),
                });
            }
            vectors.insert(term.to_lowercase(), values);
        }
        let dimension = dimension.ok_or_else(|| Error::Invalid("vector file is empty".into()))?;
        if dimension < 2 {
            return Err(Error::Invalid(format!("vector dimension {dimension} < 2")));
        }
        let digest = hex::encode(hasher.finalize());
        Ok(Self { vectors, dimension, model_id: format!("vectors-{}", &digest[..16]), requests: AtomicUsize::new(0) })
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    fn fallback(&self, token: &str) -> Vec<f64> {
        let digest = Sha256::digest(token.as_bytes());
        let seed = u64::from_le_bytes(digest[..8].try_into().unwrap());
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        loop {
            let v: Vec<f64> = (0..self.dimension).map(|_| rng.random_range(-1.0..1.0)).collect();
            let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            if norm > 1e-6 {
                return v.into_iter().map(|x| x / norm).collect();
            }
        }
    }

    pub fn embed_text(&self, text: &str) -> Vec<f64> {
        let mut toks = words(text);
        if toks.is_empty() {
            toks.push(text.trim().to_lowercase());
        }
        let mut sum = vec![0.0; self.dimension];
        for t in &toks {
            let owned;
            let v = match self.vectors.get(t) {
                Some(v) => v,
                None => {
                    owned = self.fallback(t);
                    &owned
                }
            };
            for (s, x) in sum.iter_mut().zip(v) {
                *s += x;
            }
        }
        let n = toks.len() as f64;
        let mean: Vec<f64> = sum.into_iter().map(|s| s / n).collect();
        if mean.iter().all(|&x| x == 0.0) {
            // tokens cancelled out exactly
            return self.fallback(&toks.join(" "));
        }
        mean
    }
}

impl EmbeddingProvider for LocalProvider {
    fn provider_id(&self) -> &str {
        "local"
    }

    fn model_id(&self) -> &str {
        &self.model_id
    }

    fn embed_batch(&self, texts: &[String]) -> Result<Vec<EmbeddingVector>> {
        self.requests.fetch_add(1, Ordering::Relaxed);
        Ok(texts
            .iter()
            .map(|t| EmbeddingVector {
                values: self.embed_text(t),
                provider_id: "local".into(),
                model_id: self.model_id.clone(),
            })
            .collect())
    }

    fn requests(&self) -> usize {
        self.requests.load(Ordering::Relaxed)
    }
}
