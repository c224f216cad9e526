//! Episode ingestion, corpus filters, and external feature attachment.

use std::collections::{BTreeMap, HashSet};
use std::io::{BufRead, Read, Write};
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::topics::tokenize::{Tokenizer, TokenizerConfig};
use crate::{Error, Result};

/// Length of one gender-segmentation window in seconds.
pub const SEGMENT_WINDOW_SECONDS: f64 = 30.0;
const WINDOW_SLACK_SECONDS: f64 = 0.5;

/// Seconds of the opening window attributed to each segmenter class.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct GenderSeconds {
    pub women: f64,
    pub men: f64,
    pub music: f64,
    pub no_energy: f64,
    pub noise: f64,
}

impl GenderSeconds {
    pub fn total(&self) -> f64 {
        self.women + self.men + self.music + self.no_energy + self.noise
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeRecord {
    pub show_id: String,
    pub episode_id: String,
    pub transcript: String,
    pub duration_minutes: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub language: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gender_seconds: Option<GenderSeconds>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub word_times: Option<Vec<(String, f64)>>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub external_features: BTreeMap<String, f64>,
    /// Set once the truncation filter has cut this transcript.
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub truncated: bool,
}

impl EpisodeRecord {
    pub fn new(show_id: &str, episode_id: &str, transcript: &str, duration_minutes: f64) -> Self {
        Self {
            show_id: show_id.to_string(),
            episode_id: episode_id.to_string(),
            transcript: transcript.to_string(),
            duration_minutes,
            language: None,
            gender_seconds: None,
            word_times: None,
            external_features: BTreeMap::new(),
            truncated: false,
        }
    }

    /// Whitespace-delimited word count of the transcript.
    pub fn word_count(&self) -> usize {
        self.transcript.split_whitespace().count()
    }
}

fn parse_err(field: &str, message: impl Into<String>) -> Error {
    Error::Parse { field: field.to_string(), message: message.into() }
}

fn required_str(obj: &Map<String, Value>, field: &str) -> Result<String> {
    match obj.get(field) {
        None | Some(Value::Null) => Err(Error::MissingField(field.to_string())),
        Some(Value::String(s)) => Ok(s.clone()),
        Some(other) => Err(parse_err(field, format!("expected string, got {other}"))),
    }
}

fn nonneg_number(v: &Value, field: &str) -> Result<f64> {
    let x = v
        .as_f64()
        .ok_or_else(|| parse_err(field, format!("expected number, got {v}")))?;
    if !x.is_finite() || x < 0.0 {
        return Err(parse_err(field, format!("expected a nonnegative number, got {x}")));
    }
    Ok(x)
}

fn parse_gender_seconds(v: &Value) -> Result<GenderSeconds> {
    let obj = v
        .as_object()
        .ok_or_else(|| parse_err("gender_seconds", "expected an object"))?;
    let get = |name: &str| -> Result<f64> {
        let field = format!("gender_seconds.{name}");
        match obj.get(name) {
            None | Some(Value::Null) => Err(Error::MissingField(field)),
            Some(v) => nonneg_number(v, &field),
        }
    };
    let gs = GenderSeconds {
        women: get("women")?,
        men: get("men")?,
        music: get("music")?,
        no_energy: get("no_energy")?,
        noise: get("noise")?,
    };
    if gs.total() > SEGMENT_WINDOW_SECONDS + WINDOW_SLACK_SECONDS {
        return Err(parse_err(
            "gender_seconds",
            format!("sum {} exceeds the {SEGMENT_WINDOW_SECONDS} s window", gs.total()),
        ));
    }
    Ok(gs)
}

fn parse_word_times(v: &Value) -> Result<Vec<(String, f64)>> {
    let arr = v
        .as_array()
        .ok_or_else(|| parse_err("word_times", "expected an array"))?;
    let mut out = Vec::with_capacity(arr.len());
    for (i, item) in arr.iter().enumerate() {
        let field = format!("word_times[{i}]");
        let (tok, start) = match item {
            Value::Array(pair) if pair.len() == 2 => (&pair[0], &pair[1]),
            Value::Object(o) => (
                o.get("token").unwrap_or(&Value::Null),
                o.get("start_seconds").unwrap_or(&Value::Null),
            ),
            _ => return Err(parse_err(&field, "expected [token, start_seconds]")),
        };
        let tok = tok
            .as_str()
            .ok_or_else(|| parse_err(&field, "token must be a string"))?;
        let start = nonneg_number(start, &field)?;
        if let Some((_, prev)) = out.last() {
            if start < *prev {
                return Err(parse_err(&field, "start_seconds must be nondecreasing"));
            }
        }
        out.push((tok.to_string(), start));
    }
    Ok(out)
}

/// Parses one JSONL episode line.
pub fn parse_episode_record(line: &str) -> Result<EpisodeRecord> {
    let value: Value =
        serde_json::from_str(line).map_err(|e| parse_err("<record>", e.to_string()))?;
    let obj = value
        .as_object()
        .ok_or_else(|| parse_err("<record>", "expected a JSON object"))?;

    let show_id = required_str(obj, "show_id")?;
    let episode_id = required_str(obj, "episode_id")?;
    let transcript = required_str(obj, "transcript")?;
    let duration_minutes = match obj.get("duration_minutes") {
        None | Some(Value::Null) => return Err(Error::MissingField("duration_minutes".into())),
        Some(v) => nonneg_number(v, "duration_minutes")?,
    };
    let language = match obj.get("language") {
        None | Some(Value::Null) => None,
        Some(Value::String(s)) => Some(s.clone()),
        Some(_) => return Err(parse_err("language", "expected string")),
    };
    let gender_seconds = match obj.get("gender_seconds") {
        None | Some(Value::Null) => None,
        Some(v) => Some(parse_gender_seconds(v)?),
    };
    let word_times = match obj.get("word_times") {
        None | Some(Value::Null) => None,
        Some(v) => Some(parse_word_times(v)?),
    };
    let mut external_features = BTreeMap::new();
    match obj.get("external_features") {
        None | Some(Value::Null) => {}
        Some(Value::Object(m)) => {
            for (k, v) in m {
                let field = format!("external_features.{k}");
                let x = v
                    .as_f64()
                    .ok_or_else(|| parse_err(&field, format!("expected number, got {v}")))?;
                external_features.insert(k.clone(), x);
            }
        }
        Some(_) => return Err(parse_err("external_features", "expected an object")),
    }
    let truncated = match obj.get("truncated") {
        None | Some(Value::Null) => false,
        Some(Value::Bool(b)) => *b,
        Some(_) => return Err(parse_err("truncated", "expected boolean")),
    };

    Ok(EpisodeRecord {
        show_id,
        episode_id,
        transcript,
        duration_minutes,
        language,
        gender_seconds,
        word_times,
        external_features,
        truncated,
    })
}

/// Reads a JSONL corpus, rejecting duplicate episode ids.
pub fn read_corpus<R: BufRead>(reader: R) -> Result<Vec<EpisodeRecord>> {
    let mut out = Vec::new();
    let mut seen = HashSet::new();
    for (lineno, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| Error::io("<corpus>", e))?;
        if line.trim().is_empty() {
            continue;
        }
        let rec = parse_episode_record(&line).map_err(|e| match e {
            Error::Parse { field, message } => Error::Parse {
                field,
                message: format!("line {}: {message}", lineno + 1),
            },
            other => other,
        })?;
        if !seen.insert(rec.episode_id.clone()) {
            return Err(Error::Invalid(format!(
                "duplicate episode_id {:?} on line {}",
                rec.episode_id,
                lineno + 1
            )));
        }
        out.push(rec);
    }
    Ok(out)
}

pub fn read_corpus_file(path: &Path) -> Result<Vec<EpisodeRecord>> {
    let f = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    read_corpus(std::io::BufReader::new(f))
}

pub fn write_corpus<W: Write>(mut w: W, records: &[EpisodeRecord]) -> Result<()> {
    for r in records {
        serde_json::to_writer(&mut w, r)?;
        w.write_all(b"\n").map_err(|e| Error::io("<corpus>", e))?;
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FilterConfig {
    pub truncate_minutes: f64,
    pub min_duration_minutes: f64,
    pub min_words: usize,
    pub english_only: bool,
    pub dedup_shows: bool,
}

impl Default for FilterConfig {
    fn default() -> Self {
        Self {
            truncate_minutes: 10.0,
            min_duration_minutes: 10.0,
            min_words: 10,
            english_only: true,
            dedup_shows: true,
        }
    }
}

pub const FILTER_MIN_DURATION: &str = "min_duration";
pub const FILTER_NON_ENGLISH: &str = "non_english";
pub const FILTER_MIN_WORDS: &str = "min_words";
pub const FILTER_DUPLICATE_SHOW: &str = "duplicate_show";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FilterReport {
    pub input: usize,
    pub retained: usize,
    pub counts_dropped_per_filter: BTreeMap<String, usize>,
    /// Episodes whose transcript was cut by this run.
    pub truncated: usize,
    /// Retained episodes with no gender seconds; they are excluded from
    /// gender features and D-WEAT sampling.
    pub missing_gender_seconds: usize,
}

fn is_english(tag: &str) -> bool {
    let t = tag.trim().to_ascii_lowercase();
    t == "en" || t.starts_with("en-") || t.starts_with("en_") || t == "english"
}

/// Cuts a transcript to the first `limit_minutes` of audio. Returns whether
/// the record changed.
fn truncate_record(rec: &mut EpisodeRecord, limit_minutes: f64) -> bool {
    if rec.truncated || rec.duration_minutes <= limit_minutes {
        return false;
    }
    let words: Vec<&str> = rec.transcript.split_whitespace().collect();
    let keep = match &rec.word_times {
        Some(times) => {
            let limit_s = limit_minutes * 60.0;
            let kept = times.iter().take_while(|(_, s)| *s < limit_s).count();
            rec.word_times = Some(times[..kept].to_vec());
            kept.min(words.len())
        }
        None => {
            let w = words.len() as f64;
            ((w * limit_minutes / rec.duration_minutes).ceil() as usize).min(words.len())
        }
    };
    rec.transcript = words[..keep].join(" ");
    rec.truncated = true;
    true
}

/// Applies truncation, minimum duration, language, minimum word count and
/// per-show deduplication, in that order.
pub fn apply_filters(
    records: Vec<EpisodeRecord>,
    config: &FilterConfig,
) -> (Vec<EpisodeRecord>, FilterReport) {
    let input = records.len();
    let mut dropped: BTreeMap<String, usize> = [
        FILTER_MIN_DURATION,
        FILTER_NON_ENGLISH,
        FILTER_MIN_WORDS,
        FILTER_DUPLICATE_SHOW,
    ]
    .iter()
    .map(|k| (k.to_string(), 0))
    .collect();

    let mut records = records;
    let truncated = records
        .par_iter_mut()
        .map(|r| truncate_record(r, config.truncate_minutes) as usize)
        .sum();

    let mut keep = |records: Vec<EpisodeRecord>, name: &str, pred: &dyn Fn(&EpisodeRecord) -> bool| {
        let before = records.len();
        let kept: Vec<_> = records.into_iter().filter(|r| pred(r)).collect();
        *dropped.get_mut(name).unwrap() += before - kept.len();
        kept
    };

    let records = keep(records, FILTER_MIN_DURATION, &|r| {
        r.duration_minutes >= config.min_duration_minutes
    });
    let records = keep(records, FILTER_NON_ENGLISH, &|r| {
        !config.english_only || r.language.as_deref().is_none_or(is_english)
    });
    let records = keep(records, FILTER_MIN_WORDS, &|r| r.word_count() >= config.min_words);

    let records = if config.dedup_shows {
        let mut best: BTreeMap<&str, &str> = BTreeMap::new();
        for r in &records {
            let e = best.entry(r.show_id.as_str()).or_insert(r.episode_id.as_str());
            if r.episode_id.as_str() < *e {
                *e = r.episode_id.as_str();
            }
        }
        let winners: HashSet<(String, String)> = best
            .into_iter()
            .map(|(s, e)| (s.to_string(), e.to_string()))
            .collect();
        keep(records, FILTER_DUPLICATE_SHOW, &|r| {
            winners.contains(&(r.show_id.clone(), r.episode_id.clone()))
        })
    } else {
        records
    };

    let missing_gender_seconds = records.iter().filter(|r| r.gender_seconds.is_none()).count();
    if missing_gender_seconds > 0 {
        log::warn!("{missing_gender_seconds} retained episodes have no gender seconds");
    }
    let report = FilterReport {
        input,
        retained: records.len(),
        counts_dropped_per_filter: dropped,
        truncated,
        missing_gender_seconds,
    };
    (records, report)
}

/// Attaches numeric columns from a CSV whose first column is `episode_id`.
/// Nothing is modified unless the whole table validates.
pub fn attach_external_features<R: Read>(records: &mut [EpisodeRecord], table: R) -> Result<()> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(table);
    let headers = rdr.headers()?.clone();
    if headers.get(0).map(str::trim) != Some("episode_id") {
        return Err(Error::Invalid("feature CSV must start with an episode_id column".into()));
    }
    let columns: Vec<String> = headers.iter().skip(1).map(|h| h.trim().to_string()).collect();

    let index: BTreeMap<String, usize> = records
        .iter()
        .enumerate()
        .map(|(i, r)| (r.episode_id.clone(), i))
        .collect();
    let mut unknown = Vec::new();
    let mut updates = Vec::new();
    for (row, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let id = rec.get(0).unwrap_or("").trim().to_string();
        let mut values = Vec::with_capacity(columns.len());
        for (col, name) in columns.iter().enumerate() {
            let cell = rec.get(col + 1).unwrap_or("").trim();
            let x: f64 = cell.parse().map_err(|_| Error::NonNumeric {
                row: row + 1,
                column: name.clone(),
                value: cell.to_string(),
            })?;
            values.push(x);
        }
        match index.get(&id) {
            Some(&i) => updates.push((i, values)),
            None => unknown.push(id),
        }
    }
    if !unknown.is_empty() {
        return Err(Error::UnknownEpisodes(unknown));
    }
    for (i, values) in updates {
        for (name, x) in columns.iter().zip(values) {
            records[i].external_features.insert(name.clone(), x);
        }
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TokenStat {
    pub token: String,
    pub mean: f64,
    pub std: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TokenStats {
    pub episodes: usize,
    /// True when only one episode was counted, so `std` is reported as 0.
    pub degenerate_sample: bool,
    pub tokens: Vec<TokenStat>,
}

/// Per-episode occurrence statistics for the given tokens (mean and sample
/// standard deviation).
pub fn token_stats(records: &[EpisodeRecord], tokens: &[String]) -> Result<TokenStats> {
    if records.is_empty() {
        return Err(Error::InsufficientData("token_stats needs at least one episode".into()));
    }
    if tokens.is_empty() {
        return Err(Error::Invalid("token_stats needs at least one token".into()));
    }
    let tokenizer = Tokenizer::new(TokenizerConfig::counting());
    let wanted: Vec<String> = tokens.iter().map(|t| t.to_lowercase()).collect();
    let counts: Vec<Vec<f64>> = records
        .par_iter()
        .map(|r| {
            let toks = tokenizer.tokenize(&r.transcript);
            wanted
                .iter()
                .map(|w| toks.iter().filter(|t| *t == w).count() as f64)
                .collect()
        })
        .collect();

    let n = records.len() as f64;
    let stats = wanted
        .iter()
        .enumerate()
        .map(|(j, tok)| {
            let mean = counts.iter().map(|c| c[j]).sum::<f64>() / n;
            let std = if records.len() > 1 {
                let ss: f64 = counts.iter().map(|c| (c[j] - mean).powi(2)).sum();
                (ss / (n - 1.0)).sqrt()
            } else {
                0.0
            };
            TokenStat { token: tok.clone(), mean, std }
        })
        .collect();
    Ok(TokenStats { episodes: records.len(), degenerate_sample: records.len() == 1, tokens: stats })
}
