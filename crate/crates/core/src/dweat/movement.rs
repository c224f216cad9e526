use serde::{Deserialize, Serialize};

use super::{SegmentPair, WordLists};
use crate::embed::{cosine_values, CachedEmbedder};
use crate::{Error, Result};

/// Change in summed cosine similarity to each attribute concept.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MovementDelta {
    pub delta_w: f64,
    pub delta_m: f64,
    pub repeats_used: u32,
}

/// Attribute-word vectors, fetched once per run.
#[derive(Debug, Clone)]
pub struct AttributeEmbeddings {
    pub women: Vec<Vec<f64>>,
    pub men: Vec<Vec<f64>>,
}

impl AttributeEmbeddings {
    pub fn fetch(embedder: &CachedEmbedder, lists: &WordLists) -> Result<Self> {
        let women = embedder.embed(&lists.a_w, 0)?.into_iter().map(|v| v.values).collect();
        let men = embedder.embed(&lists.a_m, 0)?.into_iter().map(|v| v.values).collect();
        Ok(Self { women, men })
    }

    fn summed(attrs: &[Vec<f64>], v: &[f64]) -> Result<f64> {
        attrs.iter().map(|a| cosine_values(a, v)).sum()
    }
}

/// Mean over `repeats` retrievals of the summed cosine between each
/// attribute list and `s'`, minus the same for `s`.
pub fn movement_deltas(
    pair: &SegmentPair,
    attrs: &AttributeEmbeddings,
    embedder: &CachedEmbedder,
    repeats: u32,
) -> Result<MovementDelta> {
    if repeats == 0 {
        return Err(Error::Invalid("repeats must be at least 1".into()));
    }
    let texts = [pair.s.clone(), pair.s_prime.clone()];
    let (mut w_s, mut w_sp, mut m_s, mut m_sp) = (0.0, 0.0, 0.0, 0.0);
    for r in 0..repeats {
        let v = embedder.embed(&texts, r)?;
        w_s += AttributeEmbeddings::summed(&attrs.women, &v[0].values)?;
        w_sp += AttributeEmbeddings::summed(&attrs.women, &v[1].values)?;
        m_s += AttributeEmbeddings::summed(&attrs.men, &v[0].values)?;
        m_sp += AttributeEmbeddings::summed(&attrs.men, &v[1].values)?;
    }
    let n = repeats as f64;
    let delta = MovementDelta { delta_w: w_sp / n - w_s / n, delta_m: m_sp / n - m_s / n, repeats_used: repeats };
    if !(delta.delta_w.is_finite() && delta.delta_m.is_finite()) {
        return Err(Error::Integrity("non-finite movement delta".into()));
    }
    Ok(delta)
}

/// How both-negative movements are scored.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Semantics {
    /// Piecewise counter rules as written: when both deltas are negative the
    /// counter of the smaller delta is incremented.
    #[default]
    Equation,
    /// The counter of the larger delta always wins.
    Prose,
}

impl std::str::FromStr for Semantics {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "equation" => Ok(Self::Equation),
            "prose" => Ok(Self::Prose),
            other => Err(Error::Config(format!("unknown semantics {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CounterOutcome {
    IncrementW,
    IncrementM,
    Tie,
}

pub fn update_counters(delta: &MovementDelta, semantics: Semantics) -> CounterOutcome {
    let (w, m) = (delta.delta_w, delta.delta_m);
    if w == m {
        return CounterOutcome::Tie;
    }
    let larger = if w > m { CounterOutcome::IncrementW } else { CounterOutcome::IncrementM };
    match semantics {
        Semantics::Prose => larger,
        Semantics::Equation => {
            if w < 0.0 && m < 0.0 {
                if w < m {
                    CounterOutcome::IncrementW
                } else {
                    CounterOutcome::IncrementM
                }
            } else {
                larger
            }
        }
    }
}
