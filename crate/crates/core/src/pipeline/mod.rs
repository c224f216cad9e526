//! Stage orchestration over a run directory. Each stage reads earlier
//! stages' artifacts from `paths.output_dir` and writes only its own.

mod config;

use std::collections::BTreeMap;
use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

pub use config::{PathsConfig, RunConfig, Stopwords, TopicsConfig, WordListConfig};

use crate::corpus::{apply_filters, attach_external_features, read_corpus_file, write_corpus, FilterReport};
use crate::correlate::{
    assemble_feature_matrix, assign_topic_gender, domain_discourse_report, read_topic_labels,
    suggest_topic_labels, topic_feature_name, write_topic_labels, CorrelationSweep, DomainDiscourseReport,
    GenderLabel, TopicCategory, TopicLabel, DISCOURSE_LEXICON, MEN, WOMEN,
};
use crate::dweat::{resolve_overlap, run_sweep, DweatReport, WordLists};
use crate::embed::{CachedEmbedder, EmbedStats, EmbeddingCache};
use crate::topics::{
    build_count_matrix, fit_lda, import_external_topic_matrix, top_words, umass_coherence, write_top_words_csv,
    CoherenceReport, TopicModel,
};
use crate::{Error, Result};

pub const CONFIG_SNAPSHOT: &str = "run_config.toml";
pub const FILTERED_CORPUS: &str = "corpus.filtered.jsonl";
pub const FILTER_REPORT: &str = "filter_report.json";
pub const TOPIC_MODEL: &str = "topic_model.json";
pub const TOP_WORDS: &str = "top_words.csv";
pub const COHERENCE: &str = "coherence.json";
pub const SUGGESTED_LABELS: &str = "topic_labels.suggested.csv";
pub const CORRELATIONS_CSV: &str = "correlations.csv";
pub const CORRELATIONS_JSON: &str = "correlations.json";
pub const TOPIC_GENDER: &str = "topic_gender.json";
pub const DOMAIN_DISCOURSE: &str = "domain_discourse.json";
pub const WORD_LISTS: &str = "word_lists.json";
pub const DWEAT_REPORT: &str = "dweat_report.json";
pub const DWEAT_CSV: &str = "dweat_report.csv";
pub const DWEAT_RUN: &str = "dweat_run.json";
pub const SUMMARY: &str = "summary.json";

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Stage {
    Ingest,
    Topics,
    Correlate,
    Wordlists,
    Dweat,
    Report,
}

impl Stage {
    pub const ALL: [Stage; 6] =
        [Stage::Ingest, Stage::Topics, Stage::Correlate, Stage::Wordlists, Stage::Dweat, Stage::Report];

    pub fn name(&self) -> &'static str {
        match self {
            Stage::Ingest => "ingest",
            Stage::Topics => "topics",
            Stage::Correlate => "correlate",
            Stage::Wordlists => "wordlists",
            Stage::Dweat => "dweat",
            Stage::Report => "report",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageOutcome {
    pub stage: Stage,
    pub artifacts: Vec<PathBuf>,
    pub notes: Vec<String>,
}

/// Topic gender labels together with the categories they were read with.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TopicGender {
    pub label_source: String,
    pub gender: BTreeMap<String, GenderLabel>,
    pub categories: BTreeMap<String, TopicCategory>,
}

/// Provider and cache accounting for one dweat invocation. Kept apart from
/// the report so the report itself is reproducible across warm and cold runs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DweatRun {
    pub cache_dir: PathBuf,
    pub stats: EmbedStats,
    pub segment_errors: usize,
}

struct Run<'a> {
    cfg: &'a RunConfig,
    out: &'a Path,
    artifacts: Vec<PathBuf>,
    notes: Vec<String>,
}

impl Run<'_> {
    fn path(&self, name: &str) -> PathBuf {
        self.out.join(name)
    }

    /// Path of an earlier stage's artifact, or a dependency error.
    fn require(&self, name: &str, producer: Stage) -> Result<PathBuf> {
        let p = self.path(name);
        if p.is_file() {
            Ok(p)
        } else {
            Err(Error::MissingArtifact { path: p, hint: format!("run the `{}` stage first", producer.name()) })
        }
    }

    fn write_bytes(&mut self, name: &str, bytes: &[u8]) -> Result<()> {
        let path = self.path(name);
        let tmp = self.path(&format!(".{name}.tmp"));
        std::fs::write(&tmp, bytes).map_err(|e| Error::io(&tmp, e))?;
        std::fs::rename(&tmp, &path).map_err(|e| Error::io(&path, e))?;
        self.artifacts.push(path);
        Ok(())
    }

    fn write_json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<()> {
        let mut s = serde_json::to_string_pretty(value)?;
        s.push('\n');
        self.write_bytes(name, s.as_bytes())
    }

    fn write_with(&mut self, name: &str, f: impl FnOnce(&mut Vec<u8>) -> Result<()>) -> Result<()> {
        let mut buf = Vec::new();
        f(&mut buf)?;
        self.write_bytes(name, &buf)
    }
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let s = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Ok(serde_json::from_str(&s)?)
}

fn open(path: &Path) -> Result<File> {
    File::open(path).map_err(|e| Error::io(path, e))
}

fn require_input(path: &Path, what: &str) -> Result<()> {
    if path.is_file() {
        Ok(())
    } else {
        Err(Error::Config(format!("{what} {} does not exist", path.display())))
    }
}

/// Checks inputs the stage will read before any work starts.
fn preflight(stage: Stage, cfg: &RunConfig) -> Result<()> {
    cfg.validate()?;
    let p = &cfg.paths;
    match stage {
        Stage::Ingest => {
            let corpus = p.corpus.as_ref().ok_or_else(|| Error::Config("paths.corpus is not set".into()))?;
            require_input(corpus, "corpus")?;
            for f in &p.features {
                require_input(f, "feature table")?;
            }
        }
        Stage::Correlate | Stage::Wordlists => {
            for f in &p.external_topics {
                require_input(f, "external topic matrix")?;
            }
            if let Some(l) = &p.topic_labels {
                require_input(l, "topic label file")?;
            }
            if stage == Stage::Wordlists {
                if let Some(w) = &p.word_lists {
                    require_input(w, "word-list file")?;
                }
            }
        }
        Stage::Dweat => {
            if let Some(w) = &p.word_lists {
                require_input(w, "word-list file")?;
            }
            cfg.provider.validate()?;
            if let Some(v) = &cfg.provider.vector_file {
                require_input(v, "vector file")?;
            }
        }
        Stage::Topics | Stage::Report => {}
    }
    Ok(())
}

/// Runs one stage. The effective config is written to the output directory
/// on every invocation.
pub fn run_stage(stage: Stage, cfg: &RunConfig) -> Result<StageOutcome> {
    preflight(stage, cfg)?;
    let out = &cfg.paths.output_dir;
    std::fs::create_dir_all(out).map_err(|e| Error::io(out, e))?;
    let mut run = Run { cfg, out, artifacts: Vec::new(), notes: Vec::new() };
    run.write_bytes(CONFIG_SNAPSHOT, cfg.to_toml()?.as_bytes())?;
    match stage {
        Stage::Ingest => ingest(&mut run)?,
        Stage::Topics => topics(&mut run)?,
        Stage::Correlate => correlate(&mut run)?,
        Stage::Wordlists => wordlists(&mut run)?,
        Stage::Dweat => dweat(&mut run)?,
        Stage::Report => report(&mut run)?,
    }
    for n in &run.notes {
        log::info!("{}: {n}", stage.name());
    }
    Ok(StageOutcome { stage, artifacts: run.artifacts, notes: run.notes })
}

/// Runs all six stages in order, stopping at the first failure.
pub fn run_all(cfg: &RunConfig) -> Result<Vec<StageOutcome>> {
    Stage::ALL.iter().map(|&s| run_stage(s, cfg)).collect()
}

fn ingest(run: &mut Run) -> Result<()> {
    let mut records = read_corpus_file(run.cfg.paths.corpus.as_ref().unwrap())?;
    for f in &run.cfg.paths.features {
        attach_external_features(&mut records, open(f)?)?;
    }
    let (kept, report) = apply_filters(records, &run.cfg.filter);
    if kept.is_empty() {
        return Err(Error::InsufficientData("no episodes survive the filters".into()));
    }
    run.write_with(FILTERED_CORPUS, |b| write_corpus(b, &kept))?;
    run.write_json(FILTER_REPORT, &report)
}

fn topics(run: &mut Run) -> Result<()> {
    let records = read_corpus_file(&run.require(FILTERED_CORPUS, Stage::Ingest)?)?;
    let t = &run.cfg.topics;
    let counts = build_count_matrix(&records, &t.count_config())?;
    let model = fit_lda(&counts, &t.lda_config())?;
    let coherence = umass_coherence(&model, &counts, t.coherence_n.min(model.n_terms()).max(2))?;
    let suggested = suggest_topic_labels(&model, DISCOURSE_LEXICON)?;
    let top_n = t.top_n;
    run.write_json(TOPIC_MODEL, &model)?;
    run.write_with(TOP_WORDS, |b| write_top_words_csv(&model, top_n, b))?;
    run.write_json(COHERENCE, &coherence)?;
    run.write_with(SUGGESTED_LABELS, |b| write_topic_labels(&suggested, b))
}

fn load_model(run: &Run) -> Result<TopicModel> {
    let path = run.require(TOPIC_MODEL, Stage::Topics)?;
    TopicModel::from_json(&std::fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?)
}

/// Labels from the configured file, else the advisory suggestions.
fn load_labels(run: &mut Run, model: &TopicModel) -> Result<(BTreeMap<usize, TopicLabel>, String)> {
    match &run.cfg.paths.topic_labels {
        Some(p) => Ok((read_topic_labels(open(p)?)?, p.display().to_string())),
        None => {
            run.notes.push("no topic label file configured; using suggested labels".into());
            Ok((suggest_topic_labels(model, DISCOURSE_LEXICON)?, "suggested".into()))
        }
    }
}

fn correlate(run: &mut Run) -> Result<()> {
    let records = read_corpus_file(&run.require(FILTERED_CORPUS, Stage::Ingest)?)?;
    let model = load_model(run)?;
    let external = run
        .cfg
        .paths
        .external_topics
        .iter()
        .map(|p| import_external_topic_matrix(open(p)?))
        .collect::<Result<Vec<_>>>()?;
    let matrix = assemble_feature_matrix(&records, Some(&model), &external)?;
    let sweep = crate::correlate::significant_pairs(&matrix, &run.cfg.correlate)?;
    let topic_names: Vec<String> = (0..model.k).map(topic_feature_name).collect();
    let gender = assign_topic_gender(&sweep, WOMEN, MEN, &topic_names)?;
    let (labels, label_source) = load_labels(run, &model)?;
    let categories: BTreeMap<String, TopicCategory> =
        labels.iter().filter(|(t, _)| **t < model.k).map(|(t, l)| (topic_feature_name(*t), l.category)).collect();
    let rq1 = domain_discourse_report(&sweep, &categories, &gender)?;

    run.write_with(CORRELATIONS_CSV, |b| sweep.write_csv(b))?;
    run.write_json(CORRELATIONS_JSON, &sweep)?;
    run.write_json(TOPIC_GENDER, &TopicGender { label_source, gender, categories })?;
    run.write_json(DOMAIN_DISCOURSE, &rq1)
}

/// The gendered discourse topic with the strongest correlation to its gender.
fn strongest(tg: &TopicGender, sweep: &CorrelationSweep, label: GenderLabel, feature: &str) -> Option<(String, f64)> {
    tg.gender
        .iter()
        .filter(|(t, g)| **g == label && tg.categories.get(*t) == Some(&TopicCategory::Discourse))
        .filter_map(|(t, _)| sweep.pair(t, feature).map(|r| (t.clone(), r.r)))
        .max_by(|a, b| a.1.total_cmp(&b.1).then_with(|| b.0.cmp(&a.0)))
}

fn wordlists(run: &mut Run) -> Result<()> {
    if let Some(p) = &run.cfg.paths.word_lists {
        let mut lists = WordLists::load(p)?;
        if lists.provenance.is_empty() {
            lists.provenance = format!("file {}", p.display());
        }
        run.notes.push(format!("word lists taken from {}", p.display()));
        return run.write_json(WORD_LISTS, &lists);
    }
    let model = load_model(run)?;
    let tg: TopicGender = read_json(&run.require(TOPIC_GENDER, Stage::Correlate)?)?;
    let sweep: CorrelationSweep = read_json(&run.require(CORRELATIONS_JSON, Stage::Correlate)?)?;
    let pick = |label, feature| {
        strongest(&tg, &sweep, label, feature).ok_or_else(|| {
            Error::InsufficientData(format!(
                "no discourse topic is labeled {label:?}; supply paths.word_lists or a topic label file"
            ))
        })
    };
    let (topic_w, _) = pick(GenderLabel::Women, WOMEN)?;
    let (topic_m, _) = pick(GenderLabel::Men, MEN)?;
    let ranked = |name: &str| -> Result<Vec<String>> {
        let id = crate::correlate::topic_id_from_feature(name)
            .ok_or_else(|| Error::Invalid(format!("{name} is not a fitted topic")))?;
        Ok(top_words(&model, id, run.cfg.wordlists.depth)?.into_iter().map(|(w, _)| w).collect())
    };
    let (t_w, t_m) = resolve_overlap(&ranked(&topic_w)?, &ranked(&topic_m)?, run.cfg.wordlists.target_len)?;
    let (a_w, a_m) = WordLists::default_attributes();
    let lists = WordLists { a_w, a_m, t_w, t_m, provenance: format!("{topic_w} (women), {topic_m} (men)") };
    lists.validate()?;
    run.write_json(WORD_LISTS, &lists)
}

fn dweat(run: &mut Run) -> Result<()> {
    let lists = match &run.cfg.paths.word_lists {
        Some(p) => WordLists::load(p)?,
        None => {
            let p = run.path(WORD_LISTS);
            if !p.is_file() {
                return Err(Error::MissingArtifact {
                    path: p,
                    hint: "run the `wordlists` stage first or set paths.word_lists".into(),
                });
            }
            WordLists::load(&p)?
        }
    };
    let records = read_corpus_file(&run.require(FILTERED_CORPUS, Stage::Ingest)?)?;
    let provider = run.cfg.provider.build()?;
    let cache_dir = run.cfg.cache_dir();
    let embedder = CachedEmbedder::new(provider, Some(EmbeddingCache::open(&cache_dir)?));
    let report = run_sweep(&records, &lists, &embedder, &run.cfg.dweat)?;
    run.notes.extend(report.notes.iter().cloned());
    let stats = embedder.stats();
    run.write_json(DWEAT_REPORT, &report)?;
    run.write_with(DWEAT_CSV, |b| report.write_csv(b))?;
    run.write_json(DWEAT_RUN, &DweatRun { cache_dir, stats, segment_errors: report.errors.len() })
}

fn file_hash(path: &Path) -> Result<String> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    Ok(hex::encode(Sha256::digest(&bytes)))
}

#[derive(Debug, Clone, Serialize)]
struct CellSummary {
    set: &'static str,
    tau: f64,
    gamma: usize,
    samples_kept: usize,
    pct_w: Option<f64>,
    pct_m: Option<f64>,
}

fn report(run: &mut Run) -> Result<()> {
    let needed = [
        (FILTER_REPORT, Stage::Ingest),
        (TOPIC_MODEL, Stage::Topics),
        (COHERENCE, Stage::Topics),
        (CORRELATIONS_JSON, Stage::Correlate),
        (TOPIC_GENDER, Stage::Correlate),
        (DOMAIN_DISCOURSE, Stage::Correlate),
        (WORD_LISTS, Stage::Wordlists),
        (DWEAT_REPORT, Stage::Dweat),
    ];
    let mut hashes = BTreeMap::new();
    for (name, stage) in needed {
        hashes.insert(name, file_hash(&run.require(name, stage)?)?);
    }
    let filter: FilterReport = read_json(&run.path(FILTER_REPORT))?;
    let model = load_model(run)?;
    let coherence: CoherenceReport = read_json(&run.path(COHERENCE))?;
    let sweep: CorrelationSweep = read_json(&run.path(CORRELATIONS_JSON))?;
    let tg: TopicGender = read_json(&run.path(TOPIC_GENDER))?;
    let rq1: DomainDiscourseReport = read_json(&run.path(DOMAIN_DISCOURSE))?;
    let lists: WordLists = read_json(&run.path(WORD_LISTS))?;
    let dweat: DweatReport = read_json(&run.path(DWEAT_REPORT))?;

    let topics_with = |g: GenderLabel| -> Vec<&String> { tg.gender.iter().filter(|(_, l)| **l == g).map(|(t, _)| t).collect() };
    let cells: Vec<CellSummary> = dweat
        .cells
        .iter()
        .map(|c| CellSummary {
            set: c.set.label(),
            tau: c.tau,
            gamma: c.gamma,
            samples_kept: c.samples_kept,
            pct_w: c.pct_w,
            pct_m: c.pct_m,
        })
        .collect();
    let summary = serde_json::json!({
        "filter": filter,
        "topics": {
            "k": model.k,
            "vocabulary_size": model.n_terms(),
            "documents": model.doc_ids.len(),
            "coherence_mean": coherence.mean,
        },
        "correlate": {
            "features_tested": sweep.features_tested.len(),
            "excluded_constant": sweep.excluded_constant,
            "z": sweep.z,
            "alpha_corrected": sweep.alpha_corrected,
            "significant_pairs": sweep.results.iter().filter(|r| r.significant && r.passed_r_filter).count(),
            "label_source": tg.label_source,
            "women_topics": topics_with(GenderLabel::Women),
            "men_topics": topics_with(GenderLabel::Men),
        },
        "domain_discourse": rq1.verdicts,
        "word_lists": lists,
        "dweat": {
            "provider_id": dweat.provider_id,
            "model_id": dweat.model_id,
            "semantics": dweat.config.semantics,
            "segment_errors": dweat.errors.len(),
            "notes": dweat.notes,
            "cells": cells,
        },
        "artifact_sha256": hashes,
    });
    run.write_json(SUMMARY, &summary)
}

/// Writes a synthetic corpus, a random word-vector file and a config that
/// runs the whole pipeline on them.
pub fn write_synthetic_run(dir: &Path, seed: u64) -> Result<PathBuf> {
    use crate::synth::{corpus_vocabulary, random_vectors, synthetic_corpus};
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let records = synthetic_corpus(seed);
    let corpus = dir.join("corpus.jsonl");
    let f = File::create(&corpus).map_err(|e| Error::io(&corpus, e))?;
    write_corpus(BufWriter::new(f), &records)?;

    let mut vocab = corpus_vocabulary(&records);
    let (a_w, a_m) = WordLists::default_attributes();
    vocab.extend(a_w.into_iter().chain(a_m));
    let vectors = dir.join("vectors.txt");
    let text = random_vectors(vocab.iter().map(String::as_str), 50, seed);
    std::fs::write(&vectors, text).map_err(|e| Error::io(&vectors, e))?;

    let mut cfg = RunConfig::default();
    cfg.paths.corpus = Some("corpus.jsonl".into());
    cfg.paths.output_dir = "out".into();
    cfg.topics.k = 6;
    cfg.topics.seed = seed;
    cfg.provider.vector_file = Some("vectors.txt".into());
    let path = dir.join("gendisc.toml");
    std::fs::write(&path, cfg.to_toml()?).map_err(|e| Error::io(&path, e))?;
    Ok(path)
}
