//! Transcript tokenization for bag-of-words modeling.

use std::collections::HashSet;

use serde::{Deserialize, Serialize};

/// English stopword list (the common 179-word NLTK list).
pub const ENGLISH_STOPWORDS: &[&str] = &[
    "i", "me", "my", "myself", "we", "our", "ours", "ourselves", "you", "you're", "you've",
    "you'll", "you'd", "your", "yours", "yourself", "yourselves", "he", "him", "his", "himself",
    "she", "she's", "her", "hers", "herself", "it", "it's", "its", "itself", "they", "them",
    "their", "theirs", "themselves", "what", "which", "who", "whom", "this", "that", "that'll",
    "these", "those", "am", "is", "are", "was", "were", "be", "been", "being", "have", "has",
    "had", "having", "do", "does", "did", "doing", "a", "an", "the", "and", "but", "if", "or",
    "because", "as", "until", "while", "of", "at", "by", "for", "with", "about", "against",
    "between", "into", "through", "during", "before", "after", "above", "below", "to", "from",
    "up", "down", "in", "out", "on", "off", "over", "under", "again", "further", "then", "once",
    "here", "there", "when", "where", "why", "how", "all", "any", "both", "each", "few", "more",
    "most", "other", "some", "such", "no", "nor", "not", "only", "own", "same", "so", "than",
    "too", "very", "s", "t", "can", "will", "just", "don", "don't", "should", "should've", "now",
    "d", "ll", "m", "o", "re", "ve", "y", "ain", "aren", "aren't", "couldn", "couldn't", "didn",
    "didn't", "doesn", "doesn't", "hadn", "hadn't", "hasn", "hasn't", "haven", "haven't", "isn",
    "isn't", "ma", "mightn", "mightn't", "mustn", "mustn't", "needn", "needn't", "shan", "shan't",
    "shouldn", "shouldn't", "wasn", "wasn't", "weren", "weren't", "won", "won't", "wouldn",
    "wouldn't",
];

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TokenizerConfig {
    pub lowercase: bool,
    /// `None` disables stopword removal.
    pub stopwords: Option<Vec<String>>,
    pub min_token_len: usize,
    pub stem: bool,
}

impl Default for TokenizerConfig {
    fn default() -> Self {
        Self {
            lowercase: true,
            stopwords: Some(ENGLISH_STOPWORDS.iter().map(|s| s.to_string()).collect()),
            min_token_len: 2,
            stem: false,
        }
    }
}

impl TokenizerConfig {
    /// Raw word counting: no stopwords, no length floor.
    pub fn counting() -> Self {
        Self { lowercase: true, stopwords: None, min_token_len: 1, stem: false }
    }
}

/// A reusable tokenizer with its stopword set materialized.
#[derive(Debug, Clone)]
pub struct Tokenizer {
    config: TokenizerConfig,
    stopwords: HashSet<String>,
}

impl Tokenizer {
    pub fn new(config: TokenizerConfig) -> Self {
        let stopwords = config
            .stopwords
            .iter()
            .flatten()
            .map(|s| s.to_lowercase())
            .collect();
        Self { config, stopwords }
    }

    pub fn config(&self) -> &TokenizerConfig {
        &self.config
    }

    pub fn tokenize(&self, text: &str) -> Vec<String> {
        text.split(|c: char| !c.is_alphabetic())
            .filter(|t| !t.is_empty())
            .map(|t| if self.config.lowercase { t.to_lowercase() } else { t.to_string() })
            .filter(|t| t.chars().count() >= self.config.min_token_len)
            .filter(|t| !self.stopwords.contains(t.as_str()))
            .map(|t| if self.config.stem { stem(&t) } else { t })
            .collect()
    }
}

impl Default for Tokenizer {
    fn default() -> Self {
        Self::new(TokenizerConfig::default())
    }
}

pub fn tokenize(text: &str, config: &TokenizerConfig) -> Vec<String> {
    Tokenizer::new(config.clone()).tokenize(text)
}

/// Crude suffix stemmer: strips a trailing "ing", otherwise a trailing
/// single "s". The stem must keep at least three characters.
pub fn stem(token: &str) -> String {
    if let Some(base) = token.strip_suffix("ing") {
        if base.chars().count() >= 3 {
            return base.to_string();
        }
    }
    if let Some(base) = token.strip_suffix('s') {
        if !base.ends_with('s') && base.chars().count() >= 3 {
            return base.to_string();
        }
    }
    token.to_string()
}
