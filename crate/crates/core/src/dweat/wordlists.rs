use std::collections::{HashMap, HashSet};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Attribute and target word lists. Serialized with the keys
/// `a_w`, `a_m`, `t_w`, `t_m`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WordLists {
    pub a_w: Vec<String>,
    pub a_m: Vec<String>,
    pub t_w: Vec<String>,
    pub t_m: Vec<String>,
    #[serde(default)]
    pub provenance: String,
}

fn owned(words: &[&str]) -> Vec<String> {
    words.iter().map(|w| w.to_string()).collect()
}

impl WordLists {
    pub fn default_attributes() -> (Vec<String>, Vec<String>) {
        (
            owned(&["women", "woman", "girl", "she", "her", "sister", "hers", "daughter"]),
            owned(&["men", "man", "boy", "he", "his", "brother", "him", "son"]),
        )
    }

    /// The published LDA-derived lists.
    pub fn published() -> Self {
        let (a_w, a_m) = Self::default_attributes();
        Self {
            a_w,
            a_m,
            t_w: owned(&["like", "really", "people", "want", "things", "life", "feel", "time", "something", "right"]),
            t_m: owned(&["going", "think", "get", "got", "one", "good", "well", "yeah", "bit", "week"]),
            provenance: "published LDA discourse topics (feminine and masculine)".into(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, list) in [("a_w", &self.a_w), ("a_m", &self.a_m), ("t_w", &self.t_w), ("t_m", &self.t_m)] {
            if list.is_empty() {
                return Err(Error::Invalid(format!("word list {name} is empty")));
            }
            for w in list.iter() {
                if w.is_empty() || w.chars().any(char::is_whitespace) || w.to_lowercase() != *w {
                    return Err(Error::Invalid(format!(
                        "word list {name} entry {w:?} is not a lowercase single token"
                    )));
                }
            }
        }
        let tw: HashSet<&String> = self.t_w.iter().collect();
        if let Some(w) = self.t_m.iter().find(|w| tw.contains(w)) {
            return Err(Error::Invalid(format!("{w:?} is in both target lists")));
        }
        Ok(())
    }

    /// Lists with the women and men roles exchanged.
    pub fn mirrored(&self) -> Self {
        Self {
            a_w: self.a_m.clone(),
            a_m: self.a_w.clone(),
            t_w: self.t_m.clone(),
            t_m: self.t_w.clone(),
            provenance: format!("mirrored: {}", self.provenance),
        }
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let lists: WordLists = serde_json::from_str(s)?;
        lists.validate()?;
        Ok(lists)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let s = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&s)
    }
}

/// Builds disjoint target lists from two ranked word lists: a word at the
/// same rank in both is dropped from both, a word at different ranks stays
/// only where it ranks higher. Each list is refilled from its deeper ranks
/// until it holds `target_len` words.
pub fn resolve_overlap(list_w: &[String], list_m: &[String], target_len: usize) -> Result<(Vec<String>, Vec<String>)> {
    fn first_ranks(list: &[String]) -> (Vec<&String>, HashMap<&String, usize>) {
        let mut order = Vec::new();
        let mut rank = HashMap::new();
        for (i, w) in list.iter().enumerate() {
            if !rank.contains_key(w) {
                rank.insert(w, i);
                order.push(w);
            }
        }
        (order, rank)
    }
    let (order_w, rank_w) = first_ranks(list_w);
    let (order_m, rank_m) = first_ranks(list_m);

    let survivors = |order: &[&String], own: &HashMap<&String, usize>, other: &HashMap<&String, usize>| {
        order
            .iter()
            .filter(|w| match other.get(*w) {
                None => true,
                Some(&r_other) => own[*w] < r_other,
            })
            .take(target_len)
            .map(|w| (*w).clone())
            .collect::<Vec<String>>()
    };
    let t_w = survivors(&order_w, &rank_w, &rank_m);
    let t_m = survivors(&order_m, &rank_m, &rank_w);
    if t_w.len() < target_len || t_m.len() < target_len {
        return Err(Error::InsufficientDepth { achieved_w: t_w.len(), achieved_m: t_m.len(), target: target_len });
    }
    Ok((t_w, t_m))
}
