use std::collections::HashSet;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::text::word_spans;
use crate::{Error, Result};

/// An original segment and its word-swapped counterpart.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SegmentPair {
    pub episode_id: String,
    pub s: String,
    pub s_prime: String,
    pub gamma: usize,
    /// `(byte offset in s, original word, replacement)`.
    pub swap_log: Vec<(usize, String, String)>,
}

impl SegmentPair {
    /// Rebuilds `s'` from `s` and the swap log.
    pub fn replay(&self) -> String {
        let mut out = String::with_capacity(self.s.len());
        let mut cursor = 0;
        for (pos, orig, repl) in &self.swap_log {
            out.push_str(&self.s[cursor..*pos]);
            out.push_str(repl);
            cursor = pos + orig.len();
        }
        out.push_str(&self.s[cursor..]);
        out
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum SwapOutcome {
    Kept(SegmentPair),
    Rejected { gamma: usize },
}

/// Replaces every whole-word, case-insensitive occurrence of a `t_src` word
/// with an independent uniform draw from `t_dst`, inserted lowercase.
/// Segments with fewer than `gamma_min` replacements are rejected.
pub fn swap_words(
    episode_id: &str,
    segment: &str,
    t_src: &[String],
    t_dst: &[String],
    gamma_min: usize,
    seed: u64,
) -> Result<SwapOutcome> {
    if t_src.is_empty() || t_dst.is_empty() {
        return Err(Error::Invalid("swap lists must be nonempty".into()));
    }
    let src: HashSet<String> = t_src.iter().map(|w| w.to_lowercase()).collect();
    if t_dst.iter().any(|w| src.contains(&w.to_lowercase())) {
        return Err(Error::Invalid("swap lists must be disjoint".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut swap_log = Vec::new();
    for (start, end) in word_spans(segment) {
        let word = &segment[start..end];
        if src.contains(&word.to_lowercase()) {
            let repl = t_dst[rng.random_range(0..t_dst.len())].to_lowercase();
            swap_log.push((start, word.to_string(), repl));
        }
    }
    let gamma = swap_log.len();
    if gamma < gamma_min {
        return Ok(SwapOutcome::Rejected { gamma });
    }
    let mut pair = SegmentPair {
        episode_id: episode_id.to_string(),
        s: segment.to_string(),
        s_prime: String::new(),
        gamma,
        swap_log,
    };
    pair.s_prime = pair.replay();
    Ok(SwapOutcome::Kept(pair))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn l(words: &[&str]) -> Vec<String> {
        words.iter().map(|w| w.to_string()).collect()
    }

    #[test]
    fn published_example_sentence() {
        let out = swap_words(
            "e1",
            "And I was going, hey, it's cold outside...",
            &l(&["going", "think"]),
            &l(&["like"]),
            1,
            3,
        )
        .unwrap();
        let SwapOutcome::Kept(p) = out else { panic!("rejected") };
        assert_eq!(p.s_prime, "And I was like, hey, it's cold outside...");
        assert_eq!(p.gamma, 1);
        assert_eq!(p.swap_log, vec![(10, "going".to_string(), "like".to_string())]);
    }

    #[test]
    fn no_targets_rejected() {
        let out = swap_words("e", "Nothing to see here.", &l(&["going"]), &l(&["like"]), 1, 0).unwrap();
        assert_eq!(out, SwapOutcome::Rejected { gamma: 0 });
    }

    #[test]
    fn per_occurrence_replacement() {
        let SwapOutcome::Kept(p) = swap_words("e", "going going", &l(&["going"]), &l(&["like"]), 1, 0).unwrap()
        else {
            panic!()
        };
        assert_eq!(p.s_prime, "like like");
        assert_eq!(p.gamma, 2);
    }

    #[test]
    fn case_insensitive_whole_words_only() {
        let SwapOutcome::Kept(p) =
            swap_words("e", "Going ongoing GOING going's", &l(&["going"]), &l(&["like"]), 1, 0).unwrap()
        else {
            panic!()
        };
        assert_eq!(p.s_prime, "like ongoing like going's");
    }

    #[test]
    fn overlapping_lists_rejected() {
        assert!(swap_words("e", "x", &l(&["a"]), &l(&["A"]), 1, 0).is_err());
    }
}
