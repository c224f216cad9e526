//! Per-episode feature matrix, pairwise Pearson significance testing under a
//! Bonferroni correction, and the topic-gender and domain-discourse reports
//! derived from the significant pairs.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::io::{Read, Write};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::EpisodeRecord;
use crate::stats::correlation_p_value;
use crate::topics::{top_words, ExternalTopicMatrix, TopicModel};
use crate::{Error, Result};

pub const WOMEN: &str = "women";
pub const MEN: &str = "men";

pub fn topic_feature_name(topic: usize) -> String {
    format!("topic_{topic}")
}

pub fn topic_id_from_feature(name: &str) -> Option<usize> {
    name.strip_prefix("topic_")?.parse().ok()
}

/// Episodes x features, with `None` marking a missing cell.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct FeatureMatrix {
    pub episode_ids: Vec<String>,
    pub names: Vec<String>,
    /// One column per feature, each aligned with `episode_ids`.
    pub columns: Vec<Vec<Option<f64>>>,
}

impl FeatureMatrix {
    pub fn new(episode_ids: Vec<String>) -> Self {
        Self { episode_ids, names: Vec::new(), columns: Vec::new() }
    }

    pub fn add_column(&mut self, name: impl Into<String>, values: Vec<Option<f64>>) -> Result<()> {
        let name = name.into();
        if values.len() != self.episode_ids.len() {
            return Err(Error::Invalid(format!(
                "feature {name} has {} values for {} episodes",
                values.len(),
                self.episode_ids.len()
            )));
        }
        if self.names.contains(&name) {
            return Err(Error::Invalid(format!("duplicate feature name {name}")));
        }
        self.names.push(name);
        self.columns.push(values);
        Ok(())
    }

    pub fn column(&self, name: &str) -> Option<&[Option<f64>]> {
        self.names.iter().position(|n| n == name).map(|i| self.columns[i].as_slice())
    }

    pub fn n_features(&self) -> usize {
        self.names.len()
    }

    /// Names of features with fewer than two distinct observed values.
    pub fn constant_features(&self) -> Vec<String> {
        self.names
            .iter()
            .zip(&self.columns)
            .filter(|(_, col)| {
                let mut vals = col.iter().flatten();
                match vals.next() {
                    None => true,
                    Some(first) => vals.all(|v| v == first),
                }
            })
            .map(|(n, _)| n.clone())
            .collect()
    }

    /// Removes constant features and returns their names.
    pub fn drop_constant(&mut self) -> Vec<String> {
        let constant = self.constant_features();
        if !constant.is_empty() {
            log::warn!("excluding constant features: {}", constant.join(", "));
            let keep: Vec<bool> = self.names.iter().map(|n| !constant.contains(n)).collect();
            let mut it = keep.iter();
            self.names.retain(|_| *it.next().unwrap());
            let mut it = keep.iter();
            self.columns.retain(|_| *it.next().unwrap());
        }
        constant
    }
}

/// Builds the per-episode feature matrix: topic weights, gender seconds,
/// duration, word count, external features and imported topic columns.
pub fn assemble_feature_matrix(
    records: &[EpisodeRecord],
    model: Option<&TopicModel>,
    external_topics: &[ExternalTopicMatrix],
) -> Result<FeatureMatrix> {
    let ids: Vec<String> = records.iter().map(|r| r.episode_id.clone()).collect();
    let mut m = FeatureMatrix::new(ids.clone());

    if let Some(model) = model {
        let row_of: HashMap<&str, usize> =
            model.doc_ids.iter().enumerate().map(|(i, d)| (d.as_str(), i)).collect();
        for t in 0..model.k {
            let col = ids
                .iter()
                .map(|id| row_of.get(id.as_str()).map(|&r| model.theta[r][t]))
                .collect();
            m.add_column(topic_feature_name(t), col)?;
        }
    }

    type Getter = fn(&crate::corpus::GenderSeconds) -> f64;
    let gender: [(&str, Getter); 5] = [
        (WOMEN, |g| g.women),
        (MEN, |g| g.men),
        ("music", |g| g.music),
        ("no_energy", |g| g.no_energy),
        ("noise", |g| g.noise),
    ];
    for (name, get) in gender {
        m.add_column(name, records.iter().map(|r| r.gender_seconds.as_ref().map(get)).collect())?;
    }
    m.add_column("duration", records.iter().map(|r| Some(r.duration_minutes)).collect())?;
    m.add_column("word_count", records.iter().map(|r| Some(r.word_count() as f64)).collect())?;

    let ext_names: BTreeSet<&String> = records.iter().flat_map(|r| r.external_features.keys()).collect();
    for name in ext_names {
        m.add_column(name.clone(), records.iter().map(|r| r.external_features.get(name).copied()).collect())?;
    }

    for ext in external_topics {
        let row_of: HashMap<&str, usize> =
            ext.episode_ids.iter().enumerate().map(|(i, d)| (d.as_str(), i)).collect();
        let unmatched = ext.episode_ids.len() - ids.iter().filter(|id| row_of.contains_key(id.as_str())).count();
        if unmatched > 0 {
            log::warn!("{unmatched} external topic rows do not match a corpus episode");
        }
        for (name, values) in &ext.columns {
            let col = ids.iter().map(|id| row_of.get(id.as_str()).map(|&r| values[r])).collect();
            m.add_column(name.clone(), col)?;
        }
    }
    Ok(m)
}

/// Sample Pearson correlation by the two-pass centered formula.
pub fn pearson_r(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::Invalid(format!("length mismatch {} vs {}", x.len(), y.len())));
    }
    let n = x.len();
    if n < 3 {
        return Err(Error::InsufficientData(format!("correlation needs n >= 3, got {n}")));
    }
    let mx = x.iter().sum::<f64>() / n as f64;
    let my = y.iter().sum::<f64>() / n as f64;
    let (mut sxx, mut syy, mut sxy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        let dx = a - mx;
        let dy = b - my;
        sxx += dx * dx;
        syy += dy * dy;
        sxy += dx * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(Error::UndefinedCorrelation("constant vector".into()));
    }
    Ok((sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0))
}

pub fn p_value(r: f64, n: usize) -> Result<f64> {
    correlation_p_value(r, n)
}

pub fn bonferroni_tests(n_features: usize) -> usize {
    n_features * n_features.saturating_sub(1) / 2
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SignificanceConfig {
    pub alpha0: f64,
    pub min_abs_r: f64,
}

impl Default for SignificanceConfig {
    fn default() -> Self {
        Self { alpha0: 0.05, min_abs_r: 0.1 }
    }
}

impl SignificanceConfig {
    pub fn alpha_corrected(&self, z: usize) -> f64 {
        self.alpha0 / z as f64
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelationResult {
    pub feature_a: String,
    pub feature_b: String,
    pub r: f64,
    pub n: usize,
    pub p: f64,
    pub significant: bool,
    pub passed_r_filter: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SkippedPair {
    pub feature_a: String,
    pub feature_b: String,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelationSweep {
    pub features_tested: Vec<String>,
    pub excluded_constant: Vec<String>,
    pub z: usize,
    pub alpha0: f64,
    pub alpha_corrected: f64,
    pub min_abs_r: f64,
    /// Sorted by |r| descending, then by feature names.
    pub results: Vec<CorrelationResult>,
    pub skipped: Vec<SkippedPair>,
}

impl CorrelationSweep {
    pub fn pair(&self, a: &str, b: &str) -> Option<&CorrelationResult> {
        self.results.iter().find(|r| {
            (r.feature_a == a && r.feature_b == b) || (r.feature_a == b && r.feature_b == a)
        })
    }

    fn index(&self) -> HashMap<(&str, &str), &CorrelationResult> {
        let mut m = HashMap::with_capacity(self.results.len() * 2);
        for r in &self.results {
            m.insert((r.feature_a.as_str(), r.feature_b.as_str()), r);
            m.insert((r.feature_b.as_str(), r.feature_a.as_str()), r);
        }
        m
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(w);
        wtr.write_record(["feature_a", "feature_b", "r", "n", "p", "significant", "passed_r_filter"])?;
        for r in &self.results {
            wtr.write_record([
                r.feature_a.clone(),
                r.feature_b.clone(),
                r.r.to_string(),
                r.n.to_string(),
                format!("{:e}", r.p),
                r.significant.to_string(),
                r.passed_r_filter.to_string(),
            ])?;
        }
        wtr.flush().map_err(|e| Error::io("<correlations>", e))?;
        Ok(())
    }
}

fn test_pair(a: &[Option<f64>], b: &[Option<f64>]) -> Result<(f64, usize, f64)> {
    let (x, y): (Vec<f64>, Vec<f64>) =
        a.iter().zip(b).filter_map(|(u, v)| Some(((*u)?, (*v)?))).unzip();
    let r = pearson_r(&x, &y)?;
    let p = p_value(r, x.len())?;
    Ok((r, x.len(), p))
}

/// Tests every unordered pair of non-constant features.
pub fn significant_pairs(matrix: &FeatureMatrix, config: &SignificanceConfig) -> Result<CorrelationSweep> {
    let mut m = matrix.clone();
    let excluded_constant = m.drop_constant();
    let f = m.n_features();
    if f < 2 {
        return Err(Error::InsufficientData(format!("need at least 2 non-constant features, got {f}")));
    }
    let z = bonferroni_tests(f);
    let alpha_corrected = config.alpha_corrected(z);

    let pairs: Vec<(usize, usize)> = (0..f).flat_map(|i| (i + 1..f).map(move |j| (i, j))).collect();
    let outcomes: Vec<_> = pairs
        .par_iter()
        .map(|&(i, j)| (i, j, test_pair(&m.columns[i], &m.columns[j])))
        .collect();

    let mut results = Vec::new();
    let mut skipped = Vec::new();
    for (i, j, outcome) in outcomes {
        let (feature_a, feature_b) = (m.names[i].clone(), m.names[j].clone());
        match outcome {
            Ok((r, n, p)) => results.push(CorrelationResult {
                feature_a,
                feature_b,
                r,
                n,
                p,
                significant: p <= alpha_corrected,
                passed_r_filter: r.abs() > config.min_abs_r,
            }),
            Err(e) => skipped.push(SkippedPair { feature_a, feature_b, reason: e.to_string() }),
        }
    }
    results.sort_by(|a, b| {
        b.r.abs()
            .total_cmp(&a.r.abs())
            .then_with(|| a.feature_a.cmp(&b.feature_a))
            .then_with(|| a.feature_b.cmp(&b.feature_b))
    });
    Ok(CorrelationSweep {
        features_tested: m.names,
        excluded_constant,
        z,
        alpha0: config.alpha0,
        alpha_corrected,
        min_abs_r: config.min_abs_r,
        results,
        skipped,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum GenderLabel {
    Women,
    Men,
    Unlabeled,
}

/// Labels each topic with the gender it correlates with significantly and
/// positively (past the |r| filter). If both qualify, the larger |r| wins.
pub fn assign_topic_gender(
    sweep: &CorrelationSweep,
    women: &str,
    men: &str,
    topic_features: &[String],
) -> Result<BTreeMap<String, GenderLabel>> {
    for g in [women, men] {
        if !sweep.features_tested.iter().any(|f| f == g) {
            return Err(Error::Invalid(format!("gender feature {g:?} is absent from the correlation results")));
        }
    }
    let index = sweep.index();
    let qualifying_r = |topic: &str, g: &str| {
        index
            .get(&(topic, g))
            .filter(|r| r.significant && r.passed_r_filter && r.r > 0.0)
            .map(|r| r.r)
    };
    Ok(topic_features
        .iter()
        .map(|t| {
            let label = match (qualifying_r(t, women), qualifying_r(t, men)) {
                (Some(_), None) => GenderLabel::Women,
                (None, Some(_)) => GenderLabel::Men,
                (Some(w), Some(m)) if w > m => GenderLabel::Women,
                (Some(w), Some(m)) if m > w => GenderLabel::Men,
                _ => GenderLabel::Unlabeled,
            };
            (t.clone(), label)
        })
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TopicCategory {
    Content,
    Discourse,
    Language,
}

impl std::str::FromStr for TopicCategory {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "content" => Ok(Self::Content),
            "discourse" => Ok(Self::Discourse),
            "language" => Ok(Self::Language),
            other => Err(Error::Invalid(format!("unknown topic category {other:?}"))),
        }
    }
}

impl std::fmt::Display for TopicCategory {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::Content => "content",
            Self::Discourse => "discourse",
            Self::Language => "language",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TopicLabel {
    pub category: TopicCategory,
    pub caption: Option<String>,
}

/// Reads `topic_id,category[,caption]` rows.
pub fn read_topic_labels<R: Read>(reader: R) -> Result<BTreeMap<usize, TopicLabel>> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).flexible(true).from_reader(reader);
    let mut out = BTreeMap::new();
    for (row, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let id_cell = rec.get(0).unwrap_or("").trim();
        let id: usize = id_cell.parse().map_err(|_| Error::NonNumeric {
            row: row + 1,
            column: "topic_id".into(),
            value: id_cell.to_string(),
        })?;
        let category = rec.get(1).unwrap_or("").parse()?;
        let caption = rec.get(2).map(str::trim).filter(|s| !s.is_empty()).map(String::from);
        out.insert(id, TopicLabel { category, caption });
    }
    Ok(out)
}

pub fn write_topic_labels<W: Write>(labels: &BTreeMap<usize, TopicLabel>, w: W) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(w);
    wtr.write_record(["topic_id", "category", "caption"])?;
    for (id, l) in labels {
        wtr.write_record([id.to_string(), l.category.to_string(), l.caption.clone().unwrap_or_default()])?;
    }
    wtr.flush().map_err(|e| Error::io("<topic labels>", e))?;
    Ok(())
}

/// Conversational filler, markers and other non-content words used to
/// suggest which topics are discourse topics.
pub const DISCOURSE_LEXICON: &[&str] = &[
    "actually", "anyway", "basically", "bit", "cool", "definitely", "feel", "get", "go", "going",
    "gonna", "good", "got", "gotta", "guess", "guy", "guys", "hey", "honestly", "kind", "know",
    "like", "literally", "little", "lot", "love", "make", "maybe", "mean", "oh", "okay", "one",
    "people", "person", "podcast", "pretty", "probably", "really", "right", "say", "said", "see",
    "something", "stuff", "sure", "thing", "things", "think", "time", "totally", "uh", "um",
    "want", "wanna", "way", "week", "well", "yeah", "yes", "life", "mhm", "hmm", "ok", "sort",
    "whatever", "anyways", "super", "crazy", "true", "great",
];

/// Advisory labels: a topic is suggested as discourse when at least 7 of its
/// top 10 words are in `lexicon`.
pub fn suggest_topic_labels(model: &TopicModel, lexicon: &[&str]) -> Result<BTreeMap<usize, TopicLabel>> {
    let lex: BTreeSet<&str> = lexicon.iter().copied().collect();
    (0..model.k)
        .map(|t| {
            let words = top_words(model, t, 10)?;
            let hits = words.iter().filter(|(w, _)| lex.contains(w.as_str())).count();
            let category = if hits >= 7 { TopicCategory::Discourse } else { TopicCategory::Content };
            let caption = words.iter().map(|(w, _)| w.as_str()).collect::<Vec<_>>().join(" ");
            Ok((t, TopicLabel { category, caption: Some(caption) }))
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscourseRow {
    pub content_topic: String,
    pub discourse_topic: String,
    pub discourse_gender: GenderLabel,
    pub r: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DiscourseVerdict {
    MasculineDiscourseCorrelated,
    FeminineDiscourseCorrelated,
    Mixed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DomainDiscourseReport {
    pub rows: Vec<DiscourseRow>,
    pub verdicts: BTreeMap<String, DiscourseVerdict>,
}

/// Content topics that correlate significantly with gendered discourse
/// topics. Every topic in `gender_labels` must carry a category.
pub fn domain_discourse_report(
    sweep: &CorrelationSweep,
    categories: &BTreeMap<String, TopicCategory>,
    gender_labels: &BTreeMap<String, GenderLabel>,
) -> Result<DomainDiscourseReport> {
    let missing: Vec<String> =
        gender_labels.keys().filter(|t| !categories.contains_key(*t)).cloned().collect();
    if !missing.is_empty() {
        return Err(Error::MissingLabels(missing));
    }
    let index = sweep.index();
    let content: Vec<&String> =
        categories.iter().filter(|(_, c)| **c == TopicCategory::Content).map(|(t, _)| t).collect();
    let discourse: Vec<(&String, GenderLabel)> = categories
        .iter()
        .filter(|(_, c)| **c == TopicCategory::Discourse)
        .filter_map(|(t, _)| match gender_labels.get(t) {
            Some(g @ (GenderLabel::Women | GenderLabel::Men)) => Some((t, *g)),
            _ => None,
        })
        .collect();

    let mut rows = Vec::new();
    let mut flags: BTreeMap<String, (bool, bool)> = BTreeMap::new();
    for c in &content {
        for (d, g) in &discourse {
            let Some(res) = index.get(&(c.as_str(), d.as_str())) else { continue };
            if !(res.significant && res.passed_r_filter) {
                continue;
            }
            rows.push(DiscourseRow {
                content_topic: (*c).clone(),
                discourse_topic: (*d).clone(),
                discourse_gender: *g,
                r: res.r,
            });
            let masculine = (*g == GenderLabel::Men) == (res.r > 0.0);
            let e = flags.entry((*c).clone()).or_default();
            if masculine {
                e.0 = true;
            } else {
                e.1 = true;
            }
        }
    }
    let verdicts = flags
        .into_iter()
        .map(|(t, (m, f))| {
            let v = match (m, f) {
                (true, false) => DiscourseVerdict::MasculineDiscourseCorrelated,
                (false, true) => DiscourseVerdict::FeminineDiscourseCorrelated,
                _ => DiscourseVerdict::Mixed,
            };
            (t, v)
        })
        .collect();
    Ok(DomainDiscourseReport { rows, verdicts })
}
