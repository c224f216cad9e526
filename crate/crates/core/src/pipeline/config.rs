use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::corpus::FilterConfig;
use crate::correlate::SignificanceConfig;
use crate::dweat::SweepConfig;
use crate::embed::ProviderConfig;
use crate::topics::ENGLISH_STOPWORDS;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PathsConfig {
    pub corpus: Option<PathBuf>,
    /// Per-episode numeric feature tables (`episode_id` first).
    pub features: Vec<PathBuf>,
    /// Topic proportions from another model, one column per topic.
    pub external_topics: Vec<PathBuf>,
    pub word_lists: Option<PathBuf>,
    pub topic_labels: Option<PathBuf>,
    pub output_dir: PathBuf,
}

impl Default for PathsConfig {
    fn default() -> Self {
        Self {
            corpus: None,
            features: Vec::new(),
            external_topics: Vec::new(),
            word_lists: None,
            topic_labels: None,
            output_dir: PathBuf::from("out"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Stopwords {
    English,
    None,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TopicsConfig {
    pub k: usize,
    pub sweeps: usize,
    pub seed: u64,
    /// `None` means `50 / k`.
    pub hyper_alpha: Option<f64>,
    pub hyper_beta: f64,
    pub stopwords: Stopwords,
    pub stem: bool,
    pub min_df: usize,
    pub max_vocab: Option<usize>,
    pub top_n: usize,
    pub coherence_n: usize,
}

impl Default for TopicsConfig {
    fn default() -> Self {
        Self {
            k: 100,
            sweeps: 200,
            seed: 0,
            hyper_alpha: None,
            hyper_beta: 0.01,
            stopwords: Stopwords::English,
            stem: false,
            min_df: 2,
            max_vocab: None,
            top_n: 10,
            coherence_n: 10,
        }
    }
}

impl TopicsConfig {
    pub fn count_config(&self) -> crate::topics::CountConfig {
        let mut tokenizer = crate::topics::TokenizerConfig { stem: self.stem, ..Default::default() };
        tokenizer.stopwords = match self.stopwords {
            Stopwords::English => Some(ENGLISH_STOPWORDS.iter().map(|s| s.to_string()).collect()),
            Stopwords::None => None,
        };
        crate::topics::CountConfig { tokenizer, min_df: self.min_df, max_vocab: self.max_vocab }
    }

    pub fn lda_config(&self) -> crate::topics::LdaConfig {
        crate::topics::LdaConfig {
            k: self.k,
            hyper_alpha: self.hyper_alpha,
            hyper_beta: self.hyper_beta,
            sweeps: self.sweeps,
            seed: self.seed,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct WordListConfig {
    /// Words per target list.
    pub target_len: usize,
    /// How deep into each topic's ranking refills may reach.
    pub depth: usize,
}

impl Default for WordListConfig {
    fn default() -> Self {
        Self { target_len: 10, depth: 50 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(default)]
pub struct RunConfig {
    pub paths: PathsConfig,
    pub filter: FilterConfig,
    pub topics: TopicsConfig,
    pub correlate: SignificanceConfig,
    pub wordlists: WordListConfig,
    pub dweat: SweepConfig,
    pub provider: ProviderConfig,
}

fn rebase(base: &Path, p: &mut PathBuf) {
    if p.is_relative() {
        *p = base.join(&*p);
    }
}

impl RunConfig {
    /// Loads a TOML config. Relative paths inside it are taken relative to
    /// the file's directory.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut cfg: RunConfig =
            toml::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new("."));
        cfg.rebase_paths(base);
        Ok(cfg)
    }

    pub fn rebase_paths(&mut self, base: &Path) {
        let p = &mut self.paths;
        for x in [&mut p.corpus, &mut p.word_lists, &mut p.topic_labels].into_iter().flatten() {
            rebase(base, x);
        }
        for x in p.features.iter_mut().chain(p.external_topics.iter_mut()) {
            rebase(base, x);
        }
        rebase(base, &mut p.output_dir);
        for x in [&mut self.provider.cache_dir, &mut self.provider.vector_file].into_iter().flatten() {
            rebase(base, x);
        }
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string_pretty(self).map_err(|e| Error::Config(e.to_string()))
    }

    /// Directory for the embedding cache: configured, or `<output>/cache`.
    pub fn cache_dir(&self) -> PathBuf {
        self.provider.cache_dir.clone().unwrap_or_else(|| self.paths.output_dir.join("cache"))
    }

    /// Checks stage-independent settings; provider settings are checked by
    /// the stage that embeds.
    pub fn validate(&self) -> Result<()> {
        let t = &self.topics;
        if t.k == 0 || t.sweeps == 0 {
            return Err(Error::Config("topics.k and topics.sweeps must be positive".into()));
        }
        if t.hyper_beta.is_nan() || t.hyper_beta <= 0.0 || t.hyper_alpha.is_some_and(|a| a.is_nan() || a <= 0.0) {
            return Err(Error::Config("topic priors must be positive".into()));
        }
        if t.top_n == 0 || t.coherence_n < 2 {
            return Err(Error::Config("topics.top_n must be >= 1 and topics.coherence_n >= 2".into()));
        }
        let c = &self.correlate;
        if !(c.alpha0 > 0.0 && c.alpha0 < 1.0) || !(0.0..1.0).contains(&c.min_abs_r) {
            return Err(Error::Config("correlate.alpha0 must be in (0,1) and min_abs_r in [0,1)".into()));
        }
        if self.wordlists.target_len == 0 || self.wordlists.depth < self.wordlists.target_len {
            return Err(Error::Config("wordlists.depth must be >= target_len >= 1".into()));
        }
        let d = &self.dweat;
        if d.taus.is_empty() || d.gammas.is_empty() || d.seeds.is_empty() {
            return Err(Error::Config("dweat taus, gammas and seeds must be nonempty".into()));
        }
        if d.taus.iter().any(|t| !t.is_finite() || *t < 0.0) {
            return Err(Error::Config("dweat taus must be finite and nonnegative".into()));
        }
        if d.repeats == 0 || d.n_podcasts == 0 || d.segments_per_podcast == 0 || d.sentences_per_segment == 0 {
            return Err(Error::Config("dweat repeats and sample sizes must be positive".into()));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn toml_round_trip_and_defaults() {
        let cfg: RunConfig = toml::from_str("[topics]\nk = 6\n[dweat]\nrepeats = 1\n").unwrap();
        assert_eq!(cfg.topics.k, 6);
        assert_eq!(cfg.topics.sweeps, 200);
        assert_eq!(cfg.dweat.repeats, 1);
        assert_eq!(cfg.dweat.taus, vec![20.0, 25.0, 30.0]);
        let back: RunConfig = toml::from_str(&cfg.to_toml().unwrap()).unwrap();
        assert_eq!(back, cfg);
    }

    #[test]
    fn relative_paths_follow_the_config_file() {
        let mut cfg: RunConfig = toml::from_str("[paths]\ncorpus = \"c.jsonl\"\noutput_dir = \"/abs/out\"\n").unwrap();
        cfg.rebase_paths(Path::new("/runs/a"));
        assert_eq!(cfg.paths.corpus.unwrap(), PathBuf::from("/runs/a/c.jsonl"));
        assert_eq!(cfg.paths.output_dir, PathBuf::from("/abs/out"));
    }

    #[test]
    fn bad_values_are_rejected() {
        let mut cfg = RunConfig::default();
        assert!(cfg.validate().is_ok());
        cfg.correlate.alpha0 = 0.0;
        assert!(matches!(cfg.validate(), Err(Error::Config(_))));
    }
}
