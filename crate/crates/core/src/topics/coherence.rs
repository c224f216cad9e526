//! UMass topic coherence over document co-occurrence.

use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use super::{top_words, CountMatrix, TopicModel};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoherenceReport {
    pub top_n: usize,
    pub per_topic: Vec<f64>,
    pub mean: f64,
}

fn doc_sets(counts: &CountMatrix, term: usize) -> HashSet<usize> {
    (0..counts.n_docs()).filter(|&d| counts.get(d, term) > 0).collect()
}

/// Sum over ordered word pairs `(w_i, w_j)`, `j < i`, of
/// `ln((D(w_i, w_j) + 1) / D(w_j))`, for each word set.
pub fn umass_for_word_sets(sets: &[Vec<String>], counts: &CountMatrix) -> Result<Vec<f64>> {
    sets.iter()
        .map(|words| {
            let docs = words
                .iter()
                .map(|w| {
                    let id = counts.vocabulary.id(w).ok_or_else(|| {
                        Error::Invalid(format!("top word {w:?} is not in the count matrix"))
                    })?;
                    let set = doc_sets(counts, id);
                    if set.is_empty() {
                        return Err(Error::Invalid(format!("top word {w:?} occurs in no document")));
                    }
                    Ok(set)
                })
                .collect::<Result<Vec<_>>>()?;
            let mut score = 0.0;
            for i in 1..docs.len() {
                for j in 0..i {
                    let co = docs[i].intersection(&docs[j]).count() as f64;
                    score += ((co + 1.0) / docs[j].len() as f64).ln();
                }
            }
            Ok(score)
        })
        .collect()
}

pub fn umass_coherence(model: &TopicModel, counts: &CountMatrix, n: usize) -> Result<CoherenceReport> {
    if n < 2 {
        return Err(Error::Invalid("coherence needs n >= 2".into()));
    }
    let sets = (0..model.k)
        .map(|t| Ok(top_words(model, t, n)?.into_iter().map(|(w, _)| w).collect()))
        .collect::<Result<Vec<Vec<String>>>>()?;
    let per_topic = umass_for_word_sets(&sets, counts)?;
    let mean = per_topic.iter().sum::<f64>() / per_topic.len() as f64;
    Ok(CoherenceReport { top_n: n, per_topic, mean })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::topics::{LdaConfig, fit_lda};

    fn matrix(docs: &[&str]) -> CountMatrix {
        let toks: Vec<Vec<String>> =
            docs.iter().map(|d| d.split_whitespace().map(String::from).collect()).collect();
        let ids = (0..docs.len()).map(|i| format!("e{i}")).collect();
        CountMatrix::from_tokens(ids, &toks, 1, None).unwrap()
    }

    #[test]
    fn always_co_occurring_pair() {
        // D = 4 documents contain both words, none contains only one.
        let m = matrix(&["a b", "a b a", "b a", "a b", "c"]);
        let s = umass_for_word_sets(&[vec!["a".into(), "b".into()]], &m).unwrap();
        assert!((s[0] - (5.0f64 / 4.0).ln()).abs() < 1e-15);
    }

    #[test]
    fn never_co_occurring_pair() {
        let mut docs = vec!["x"; 10];
        docs.extend(vec!["y"; 3]);
        let m = matrix(&docs);
        let s = umass_for_word_sets(&[vec!["x".into(), "y".into()]], &m).unwrap();
        assert!((s[0] - (0.1f64).ln()).abs() < 1e-15);
        assert!(s[0] < 0.0);
    }

    #[test]
    fn single_term_vocabulary_scores_zero() {
        let m = matrix(&["a a", "a"]);
        let model = fit_lda(&m, &LdaConfig { k: 1, sweeps: 2, ..Default::default() }).unwrap();
        let rep = umass_coherence(&model, &m, 10).unwrap();
        assert_eq!(rep.per_topic, vec![0.0]);
    }

    #[test]
    fn absent_word_errors() {
        let m = matrix(&["a b"]);
        assert!(umass_for_word_sets(&[vec!["a".into(), "zzz".into()]], &m).is_err());
    }

    #[test]
    fn n_below_two_errors() {
        let m = matrix(&["a b"]);
        let model = fit_lda(&m, &LdaConfig { k: 1, sweeps: 1, ..Default::default() }).unwrap();
        assert!(umass_coherence(&model, &m, 1).is_err());
    }
}
