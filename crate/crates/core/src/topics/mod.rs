//! Bag-of-words vectorization, LDA topic modeling and topic coherence.

mod coherence;
mod external;
mod lda;
pub mod tokenize;

use std::collections::{BTreeMap, HashMap};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use coherence::{umass_coherence, umass_for_word_sets, CoherenceReport};
pub use external::{import_external_topic_matrix, ExternalTopicMatrix, EXTERNAL_PREFIX};
pub use lda::{fit_lda, held_out_perplexity, top_words, write_top_words_csv, LdaConfig, TopicModel};
pub use tokenize::{tokenize, Tokenizer, TokenizerConfig, ENGLISH_STOPWORDS};

use crate::corpus::EpisodeRecord;
use crate::{Error, Result};

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Vocabulary {
    pub terms: Vec<String>,
    pub doc_freq: Vec<usize>,
    #[serde(skip)]
    index: HashMap<String, usize>,
}

impl Vocabulary {
    pub fn new(terms: Vec<String>, doc_freq: Vec<usize>) -> Self {
        let index = terms.iter().enumerate().map(|(i, t)| (t.clone(), i)).collect();
        Self { terms, doc_freq, index }
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn id(&self, term: &str) -> Option<usize> {
        if self.index.len() != self.terms.len() {
            // deserialized without the index
            return self.terms.iter().position(|t| t == term);
        }
        self.index.get(term).copied()
    }

    /// Maps tokens to column ids, dropping out-of-vocabulary tokens.
    pub fn encode<S: AsRef<str>>(&self, tokens: &[S]) -> Vec<usize> {
        tokens.iter().filter_map(|t| self.id(t.as_ref())).collect()
    }

    pub fn rebuild_index(&mut self) {
        self.index = self.terms.iter().enumerate().map(|(i, t)| (t.clone(), i)).collect();
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct CountConfig {
    pub tokenizer: TokenizerConfig,
    pub min_df: usize,
    pub max_vocab: Option<usize>,
}

impl Default for CountConfig {
    fn default() -> Self {
        Self { tokenizer: TokenizerConfig::default(), min_df: 2, max_vocab: None }
    }
}

/// Sparse document-term counts. Each row holds `(term id, count)` pairs
/// sorted by term id.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CountMatrix {
    pub rows: Vec<String>,
    pub vocabulary: Vocabulary,
    pub counts: Vec<Vec<(usize, u32)>>,
}

impl CountMatrix {
    pub fn n_docs(&self) -> usize {
        self.rows.len()
    }

    pub fn n_terms(&self) -> usize {
        self.vocabulary.len()
    }

    pub fn get(&self, doc: usize, term: usize) -> u32 {
        let row = &self.counts[doc];
        row.binary_search_by_key(&term, |&(t, _)| t).map(|i| row[i].1).unwrap_or(0)
    }

    pub fn dense_row(&self, doc: usize) -> Vec<u32> {
        let mut out = vec![0; self.n_terms()];
        for &(t, c) in &self.counts[doc] {
            out[t] = c;
        }
        out
    }

    pub fn doc_len(&self, doc: usize) -> u32 {
        self.counts[doc].iter().map(|&(_, c)| c).sum()
    }

    /// Builds a matrix from already tokenized documents.
    pub fn from_tokens(ids: Vec<String>, docs: &[Vec<String>], min_df: usize, max_vocab: Option<usize>) -> Result<Self> {
        if docs.iter().all(|d| d.is_empty()) {
            return Err(Error::InsufficientData("corpus has no tokens".into()));
        }
        let per_doc: Vec<BTreeMap<&str, u32>> = docs
            .par_iter()
            .map(|d| {
                let mut m = BTreeMap::new();
                for t in d {
                    *m.entry(t.as_str()).or_insert(0) += 1;
                }
                m
            })
            .collect();

        let mut df: BTreeMap<&str, usize> = BTreeMap::new();
        let mut tf: BTreeMap<&str, u64> = BTreeMap::new();
        for m in &per_doc {
            for (&t, &c) in m {
                *df.entry(t).or_insert(0) += 1;
                *tf.entry(t).or_insert(0) += c as u64;
            }
        }
        let mut kept: Vec<&str> = df.iter().filter(|(_, &d)| d >= min_df).map(|(&t, _)| t).collect();
        if let Some(max) = max_vocab {
            if kept.len() > max {
                kept.sort_by(|a, b| tf[b].cmp(&tf[a]).then(a.cmp(b)));
                kept.truncate(max);
                kept.sort_unstable();
            }
        }
        if kept.is_empty() {
            return Err(Error::InsufficientData(format!(
                "no term reaches the minimum document frequency {min_df}"
            )));
        }
        let vocabulary = Vocabulary::new(
            kept.iter().map(|t| t.to_string()).collect(),
            kept.iter().map(|t| df[t]).collect(),
        );
        let counts = per_doc
            .iter()
            .map(|m| {
                m.iter()
                    .filter_map(|(t, &c)| vocabulary.id(t).map(|id| (id, c)))
                    .collect::<Vec<_>>()
            })
            .collect();
        Ok(Self { rows: ids, vocabulary, counts })
    }
}

/// Tokenizes every episode and counts terms. The vocabulary is sorted
/// lexicographically.
pub fn build_count_matrix(records: &[EpisodeRecord], config: &CountConfig) -> Result<CountMatrix> {
    let tokenizer = Tokenizer::new(config.tokenizer.clone());
    let docs: Vec<Vec<String>> = records.par_iter().map(|r| tokenizer.tokenize(&r.transcript)).collect();
    let ids = records.iter().map(|r| r.episode_id.clone()).collect();
    CountMatrix::from_tokens(ids, &docs, config.min_df, config.max_vocab)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn recs(texts: &[&str]) -> Vec<EpisodeRecord> {
        texts
            .iter()
            .enumerate()
            .map(|(i, t)| EpisodeRecord::new(&format!("s{i}"), &format!("e{i}"), t, 12.0))
            .collect()
    }

    fn raw(min_df: usize) -> CountConfig {
        CountConfig {
            tokenizer: TokenizerConfig { stopwords: None, min_token_len: 1, ..Default::default() },
            min_df,
            max_vocab: None,
        }
    }

    #[test]
    fn direct_counting() {
        let m = build_count_matrix(&recs(&["a b b", "b c"]), &raw(1)).unwrap();
        assert_eq!(m.vocabulary.terms, vec!["a", "b", "c"]);
        assert_eq!(m.dense_row(0), vec![1, 2, 0]);
        assert_eq!(m.dense_row(1), vec![0, 1, 1]);
        assert_eq!(m.vocabulary.doc_freq, vec![1, 2, 1]);
    }

    #[test]
    fn min_df_threshold() {
        let m = build_count_matrix(&recs(&["a b b", "b c"]), &raw(2)).unwrap();
        assert_eq!(m.vocabulary.terms, vec!["b"]);
    }

    #[test]
    fn duplicate_documents_identical_rows() {
        let m = build_count_matrix(&recs(&["x y z y", "x y z y", "q"]), &raw(1)).unwrap();
        assert_eq!(m.counts[0], m.counts[1]);
    }

    #[test]
    fn empty_corpus_errors() {
        assert!(build_count_matrix(&recs(&["", "  "]), &raw(1)).is_err());
    }

    #[test]
    fn max_vocab_keeps_most_frequent() {
        let mut cfg = raw(1);
        cfg.max_vocab = Some(2);
        let m = build_count_matrix(&recs(&["a a a b b c", "c c d"]), &cfg).unwrap();
        assert_eq!(m.vocabulary.terms, vec!["a", "c"]);
    }
}
