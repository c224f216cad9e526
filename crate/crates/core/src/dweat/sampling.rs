use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::derive_seed;
use crate::corpus::EpisodeRecord;
use crate::text::split_sentences;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum GenderSet {
    #[serde(rename = "S_w")]
    Women,
    #[serde(rename = "S_m")]
    Men,
}

impl GenderSet {
    pub fn label(&self) -> &'static str {
        match self {
            GenderSet::Women => "S_w",
            GenderSet::Men => "S_m",
        }
    }
}

fn gender_seconds(r: &EpisodeRecord, set: GenderSet) -> Option<f64> {
    r.gender_seconds.as_ref().map(|g| match set {
        GenderSet::Women => g.women,
        GenderSet::Men => g.men,
    })
}

/// Draws up to `n_podcasts` episodes with at least `tau` seconds of the
/// set's gender, uniformly without replacement. The draw depends only on
/// `(seed, tau)` and the qualifying ids, not on which set is drawn.
pub fn build_sample_set(
    records: &[EpisodeRecord],
    set: GenderSet,
    tau: f64,
    n_podcasts: usize,
    seed: u64,
) -> Result<Vec<&EpisodeRecord>> {
    let mut qualifiers: Vec<&EpisodeRecord> = records
        .iter()
        .filter(|r| gender_seconds(r, set).is_some_and(|t| t >= tau))
        .collect();
    if qualifiers.is_empty() {
        return Err(Error::NoQualifiers { tau });
    }
    qualifiers.sort_by(|a, b| a.episode_id.cmp(&b.episode_id));
    if qualifiers.len() <= n_podcasts {
        if qualifiers.len() < n_podcasts {
            log::debug!(
                "{}: only {} episodes meet tau = {tau}, {n_podcasts} requested",
                set.label(),
                qualifiers.len()
            );
        }
        return Ok(qualifiers);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, &["sample", &tau.to_string()]));
    let mut picked = sample(&mut rng, qualifiers.len(), n_podcasts).into_vec();
    picked.sort_unstable();
    Ok(picked.into_iter().map(|i| qualifiers[i]).collect())
}

#[derive(Debug, Clone)]
pub struct SampleSets<'a> {
    pub s_w: Vec<&'a EpisodeRecord>,
    pub s_m: Vec<&'a EpisodeRecord>,
}

pub fn build_sample_sets<'a>(
    records: &'a [EpisodeRecord],
    tau: f64,
    n_podcasts: usize,
    seed: u64,
) -> Result<SampleSets<'a>> {
    if n_podcasts == 0 {
        return Err(Error::Invalid("n_podcasts must be at least 1".into()));
    }
    Ok(SampleSets {
        s_w: build_sample_set(records, GenderSet::Women, tau, n_podcasts, seed)?,
        s_m: build_sample_set(records, GenderSet::Men, tau, n_podcasts, seed)?,
    })
}

/// Picks up to `segments` non-overlapping windows of `sentences_per_segment`
/// consecutive sentences, uniformly among all placements, and returns them
/// in transcript order.
pub fn extract_segments(
    record: &EpisodeRecord,
    segments: usize,
    sentences_per_segment: usize,
    seed: u64,
) -> Vec<String> {
    if segments == 0 || sentences_per_segment == 0 {
        return Vec::new();
    }
    let sentences = split_sentences(&record.transcript);
    let count = segments.min(sentences.len() / sentences_per_segment);
    if count == 0 {
        return Vec::new();
    }
    let free = sentences.len() - count * sentences_per_segment;
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, &["segments", &record.episode_id]));
    // stars and bars: choosing `count` of `free + count` slots fixes the gaps
    let mut slots = sample(&mut rng, free + count, count).into_vec();
    slots.sort_unstable();
    slots
        .into_iter()
        .enumerate()
        .map(|(i, p)| {
            let start = p - i + i * sentences_per_segment;
            sentences[start..start + sentences_per_segment].join(" ")
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::GenderSeconds;

    fn rec(id: &str, women: f64, men: f64) -> EpisodeRecord {
        let mut r = EpisodeRecord::new(id, id, "x", 12.0);
        r.gender_seconds = Some(GenderSeconds { women, men, ..Default::default() });
        r
    }

    #[test]
    fn threshold_is_inclusive() {
        let recs = vec![rec("a", 0.0, 31.0), rec("b", 0.0, 29.0), rec("c", 0.0, 30.0)];
        let s = build_sample_set(&recs, GenderSet::Men, 30.0, 100, 1).unwrap();
        let ids: Vec<_> = s.iter().map(|r| r.episode_id.as_str()).collect();
        assert_eq!(ids, vec!["a", "c"]);
    }

    #[test]
    fn no_qualifiers_errors() {
        let recs = vec![rec("a", 5.0, 5.0)];
        assert!(matches!(build_sample_set(&recs, GenderSet::Women, 20.0, 10, 1), Err(Error::NoQualifiers { .. })));
        assert!(build_sample_sets(&recs, 20.0, 10, 1).is_err());
    }

    #[test]
    fn exact_count_and_deterministic() {
        let recs: Vec<_> = (0..150).map(|i| rec(&format!("e{i:03}"), 25.0, 0.0)).collect();
        let a = build_sample_set(&recs, GenderSet::Women, 20.0, 100, 9).unwrap();
        let b = build_sample_set(&recs, GenderSet::Women, 20.0, 100, 9).unwrap();
        assert_eq!(a.len(), 100);
        assert_eq!(
            a.iter().map(|r| &r.episode_id).collect::<Vec<_>>(),
            b.iter().map(|r| &r.episode_id).collect::<Vec<_>>()
        );
        let c = build_sample_set(&recs, GenderSet::Women, 20.0, 100, 10).unwrap();
        assert_ne!(
            a.iter().map(|r| &r.episode_id).collect::<Vec<_>>(),
            c.iter().map(|r| &r.episode_id).collect::<Vec<_>>()
        );
    }

    fn transcript(n: usize) -> EpisodeRecord {
        let text: Vec<String> = (0..n).map(|i| format!("Sentence number {i} here.")).collect();
        EpisodeRecord::new("s", "e", &text.join(" "), 12.0)
    }

    #[test]
    fn nine_sentences_forced_packing() {
        let segs = extract_segments(&transcript(9), 3, 3, 4);
        assert_eq!(segs.len(), 3);
        assert_eq!(segs[0], "Sentence number 0 here. Sentence number 1 here. Sentence number 2 here.");
        assert!(segs[2].ends_with("Sentence number 8 here."));
    }

    #[test]
    fn two_sentences_no_segments() {
        assert!(extract_segments(&transcript(2), 3, 3, 4).is_empty());
    }

    #[test]
    fn windows_disjoint_and_deterministic() {
        let r = transcript(40);
        for seed in 0..20 {
            let segs = extract_segments(&r, 3, 3, seed);
            assert_eq!(segs, extract_segments(&r, 3, 3, seed));
            let starts: Vec<usize> = segs
                .iter()
                .map(|s| s.split_whitespace().nth(2).unwrap().parse().unwrap())
                .collect();
            assert!(starts.windows(2).all(|w| w[1] >= w[0] + 3));
        }
    }
}
