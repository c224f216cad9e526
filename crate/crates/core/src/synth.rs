//! Deterministic synthetic data: a planted-topic corpus for LDA checks, a
//! small podcast-like corpus that exercises every pipeline stage, and word
//! vector files for the local provider.

use std::collections::BTreeSet;
use std::fmt::Write as _;

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::corpus::{EpisodeRecord, GenderSeconds};
use crate::dweat::WordLists;
use crate::text::words;

/// Documents drawn from disjoint planted topics.
#[derive(Debug, Clone)]
pub struct PlantedCorpus {
    pub topics: Vec<Vec<String>>,
    pub doc_ids: Vec<String>,
    pub docs: Vec<Vec<String>>,
}

const PLANTED_STEMS: [&str; 3] = ["kar", "mel", "sov"];

fn letters(i: usize) -> String {
    let a = (b'a' + (i / 26) as u8) as char;
    let b = (b'a' + (i % 26) as u8) as char;
    format!("{a}{b}")
}

/// 3 topics of 20 disjoint alphabetic words, 300 documents of 80 tokens.
/// Each document draws 85% of its tokens from one dominant topic and the
/// rest uniformly from all 60 words.
pub fn planted_corpus(seed: u64) -> PlantedCorpus {
    let topics: Vec<Vec<String>> = PLANTED_STEMS
        .iter()
        .map(|s| (0..20).map(|i| format!("{s}{}", letters(i))).collect())
        .collect();
    let all: Vec<&String> = topics.iter().flatten().collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut docs = Vec::with_capacity(300);
    for d in 0..300 {
        let dominant = &topics[d % 3];
        let doc = (0..80)
            .map(|_| {
                if rng.random::<f64>() < 0.85 {
                    dominant.choose(&mut rng).unwrap().clone()
                } else {
                    (*all.choose(&mut rng).unwrap()).clone()
                }
            })
            .collect();
        docs.push(doc);
    }
    PlantedCorpus { topics, doc_ids: (0..300).map(|d| format!("doc{d:03}")).collect(), docs }
}

pub const CONTENT_TOPICS: [[&str; 12]; 4] = [
    ["game", "team", "season", "coach", "player", "score", "league", "match", "ball", "field", "win", "fans"],
    ["recipe", "kitchen", "flavor", "garlic", "oven", "butter", "sauce", "dinner", "bread", "chef", "salt", "pepper"],
    ["software", "computer", "phone", "app", "data", "code", "startup", "internet", "device", "screen", "cloud", "server"],
    ["money", "market", "stock", "invest", "budget", "bank", "price", "savings", "fund", "debt", "income", "tax"],
];

const FILLERS: [&str; 14] = ["the", "and", "of", "to", "a", "it", "that", "so", "i", "we", "you", "was", "is", "in"];
const PRONOUNS: [&str; 6] = ["she", "her", "sister", "he", "his", "brother"];
const SPANISH: [&str; 10] = ["hola", "que", "como", "esta", "muy", "bien", "gracias", "donde", "casa", "tiempo"];

pub const SYNTHETIC_EPISODES: usize = 200;

fn round1(x: f64) -> f64 {
    (x * 10.0).round() / 10.0
}

fn gender_seconds(rng: &mut ChaCha8Rng, kind: usize) -> GenderSeconds {
    let (women, men) = match kind {
        // women-led, a quarter of them with a fully female opening
        0 => {
            let w = if rng.random::<f64>() < 0.25 { 30.0 } else { round1(rng.random_range(18.0..30.0)) };
            (w, round1((30.0 - w) * rng.random::<f64>()))
        }
        1 => {
            let m = if rng.random::<f64>() < 0.25 { 30.0 } else { round1(rng.random_range(18.0..30.0)) };
            (round1((30.0 - m) * rng.random::<f64>()), m)
        }
        _ => (round1(rng.random_range(8.0..14.0)), round1(rng.random_range(8.0..14.0))),
    };
    let rest = (30.0 - women - men).max(0.0);
    let music = round1(rest * rng.random::<f64>());
    GenderSeconds { women, men, music, no_energy: 0.0, noise: round1((rest - music).max(0.0)) }
}

fn capitalize(w: &str) -> String {
    let mut c = w.chars();
    c.next().map(|f| f.to_uppercase().chain(c).collect()).unwrap_or_default()
}

fn sentence(rng: &mut ChaCha8Rng, content: &[&str], feminine: f64, lists: &WordLists) -> String {
    let len = rng.random_range(10..=14);
    let toks: Vec<String> = (0..len)
        .map(|_| {
            let u = rng.random::<f64>();
            let w: &str = if u < 0.35 {
                FILLERS.choose(rng).unwrap()
            } else if u < 0.65 {
                content.choose(rng).unwrap()
            } else if u < 0.95 {
                let list = if rng.random::<f64>() < feminine { &lists.t_w } else { &lists.t_m };
                list.choose(rng).unwrap()
            } else {
                PRONOUNS.choose(rng).unwrap()
            };
            w.to_string()
        })
        .collect();
    format!("{} {}.", capitalize(&toks[0]), toks[1..].join(" "))
}

/// A 200-episode corpus whose discourse vocabulary tracks the share of
/// women's speech in each opening, with a handful of episodes that the
/// ingest filters drop (short, non-English, near-empty, repeated show).
pub fn synthetic_corpus(seed: u64) -> Vec<EpisodeRecord> {
    let lists = WordLists::published();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(SYNTHETIC_EPISODES);
    for i in 0..SYNTHETIC_EPISODES {
        let show = if (190..195).contains(&i) { format!("show{:03}", i - 190) } else { format!("show{i:03}") };
        let episode_id = format!("ep{i:03}");
        let kind = i % 5 % 3;
        let gs = gender_seconds(&mut rng, kind);
        let share = if gs.women + gs.men > 0.0 { gs.women / (gs.women + gs.men) } else { 0.5 };
        let feminine = 0.1 + 0.8 * share;
        let content = &CONTENT_TOPICS[rng.random_range(0..CONTENT_TOPICS.len())];
        let n_sentences = rng.random_range(30..45);
        let mut transcript: Vec<String> =
            (0..n_sentences).map(|_| sentence(&mut rng, content, feminine, &lists)).collect();
        let mut duration = round1(rng.random_range(10.0..25.0));
        let mut language = Some("en".to_string());
        match i {
            180..=185 => duration = round1(rng.random_range(3.0..9.5)),
            186..=189 => {
                language = Some("es".into());
                transcript = (0..n_sentences)
                    .map(|_| {
                        let t: Vec<&str> = (0..10).map(|_| *SPANISH.choose(&mut rng).unwrap()).collect();
                        format!("{} {}.", capitalize(t[0]), t[1..].join(" "))
                    })
                    .collect();
            }
            195..=197 => transcript = vec!["Yeah so um okay.".into()],
            _ => {}
        }
        let mut rec = EpisodeRecord::new(&show, &episode_id, &transcript.join(" "), duration);
        rec.language = language;
        rec.gender_seconds = if i == 198 || i == 199 { None } else { Some(gs) };
        if i % 20 == 7 {
            // evenly spaced word timestamps over the episode
            let toks: Vec<&str> = rec.transcript.split_whitespace().collect();
            let step = duration * 60.0 / toks.len() as f64;
            rec.word_times = Some(toks.iter().enumerate().map(|(j, t)| (t.to_string(), j as f64 * step)).collect());
        }
        out.push(rec);
    }
    out
}

/// Lowercased word types across transcripts, sorted.
pub fn corpus_vocabulary(records: &[EpisodeRecord]) -> BTreeSet<String> {
    records.iter().flat_map(|r| words(&r.transcript)).collect()
}

/// A `term v1 ... vd` vector file with Gaussian-ish random entries.
pub fn random_vectors<'a>(terms: impl IntoIterator<Item = &'a str>, dimension: usize, seed: u64) -> String {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = String::new();
    for t in terms {
        out.push_str(t);
        for _ in 0..dimension {
            // sum of uniforms, close enough to normal for a test double
            let x: f64 = (0..4).map(|_| rng.random_range(-1.0..1.0)).sum::<f64>() / 2.0;
            write!(out, " {x}").unwrap();
        }
        out.push('\n');
    }
    out
}

/// Vectors where every `a_w` and `t_w` word is `e0`, every `a_m` and `t_m`
/// word is `e1`, and every other term gets its own one-hot axis.
pub fn adversarial_vectors<'a>(lists: &WordLists, other_terms: impl IntoIterator<Item = &'a str>) -> String {
    let women: BTreeSet<&str> = lists.a_w.iter().chain(&lists.t_w).map(String::as_str).collect();
    let men: BTreeSet<&str> = lists.a_m.iter().chain(&lists.t_m).map(String::as_str).collect();
    let others: BTreeSet<&str> =
        other_terms.into_iter().filter(|t| !women.contains(t) && !men.contains(t)).collect();
    let dim = 2 + others.len();
    let mut out = String::new();
    let mut row = |term: &str, axis: usize| {
        out.push_str(term);
        for d in 0..dim {
            out.push_str(if d == axis { " 1" } else { " 0" });
        }
        out.push('\n');
    };
    for w in &women {
        row(w, 0);
    }
    for w in &men {
        row(w, 1);
    }
    for (i, w) in others.iter().enumerate() {
        row(w, 2 + i);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{apply_filters, FilterConfig};

    #[test]
    fn planted_topics_are_disjoint_and_alphabetic() {
        let p = planted_corpus(1);
        let all: BTreeSet<&String> = p.topics.iter().flatten().collect();
        assert_eq!(all.len(), 60);
        assert!(all.iter().all(|w| w.chars().all(|c| c.is_ascii_lowercase())));
        assert_eq!(p.docs.len(), 300);
    }

    #[test]
    fn synthetic_corpus_is_deterministic_and_exercises_filters() {
        let a = synthetic_corpus(7);
        assert_eq!(a, synthetic_corpus(7));
        assert_eq!(a.len(), SYNTHETIC_EPISODES);
        let (kept, report) = apply_filters(a, &FilterConfig::default());
        for (name, n) in &report.counts_dropped_per_filter {
            assert!(*n > 0, "filter {name} dropped nothing");
        }
        assert!(kept.len() > 150);
        assert!(kept.iter().all(|r| r.gender_seconds.is_none_or(|g| g.total() <= 30.0 + 1e-9)));
    }

    #[test]
    fn adversarial_rows_are_one_hot() {
        let lists = WordLists::published();
        let v = adversarial_vectors(&lists, ["zebra", "like"]);
        let line = v.lines().find(|l| l.starts_with("zebra ")).unwrap();
        assert_eq!(line, "zebra 0 0 1");
        assert!(v.lines().any(|l| l == "like 1 0 0"));
    }
}
