use std::collections::BTreeSet;
use std::io::Write;

use serde::{Deserialize, Serialize};

use super::{
    build_sample_set, derive_seed, extract_segments, movement_deltas, swap_words, update_counters,
    AttributeEmbeddings, CounterOutcome, GenderSet, SegmentPair, Semantics, SwapOutcome, WordLists,
};
use crate::corpus::EpisodeRecord;
use crate::embed::{content_hash, CachedEmbedder};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SweepConfig {
    pub taus: Vec<f64>,
    pub gammas: Vec<usize>,
    pub seeds: Vec<u64>,
    pub repeats: u32,
    pub semantics: Semantics,
    pub n_podcasts: usize,
    pub segments_per_podcast: usize,
    pub sentences_per_segment: usize,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            taus: vec![20.0, 25.0, 30.0],
            gammas: (1..=10).collect(),
            seeds: vec![0, 1, 2, 3, 4],
            repeats: 3,
            semantics: Semantics::Equation,
            n_podcasts: 100,
            segments_per_podcast: 3,
            sentences_per_segment: 3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeedCounts {
    pub seed: u64,
    pub c_w: usize,
    pub c_m: usize,
    pub ties: usize,
    pub samples_kept: usize,
    pub pct_w: Option<f64>,
    pub pct_m: Option<f64>,
}

/// One (set, tau, gamma) cell. Counts are totals over seeds; percentages
/// are the mean of per-seed percentages, ties excluded.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DweatCell {
    pub set: GenderSet,
    pub tau: f64,
    pub gamma: usize,
    pub c_w: usize,
    pub c_m: usize,
    pub ties: usize,
    pub samples_kept: usize,
    pub pct_w: Option<f64>,
    pub pct_m: Option<f64>,
    /// Pairs on which equation and prose semantics disagree.
    pub divergent: usize,
    pub per_seed: Vec<SeedCounts>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SegmentError {
    pub set: GenderSet,
    pub tau: f64,
    pub seed: u64,
    pub episode_id: String,
    pub text_hash: String,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DweatReport {
    pub provider_id: String,
    pub model_id: String,
    pub lists: WordLists,
    pub config: SweepConfig,
    pub cells: Vec<DweatCell>,
    pub errors: Vec<SegmentError>,
    pub notes: Vec<String>,
}

impl DweatReport {
    pub fn cell(&self, set: GenderSet, tau: f64, gamma: usize) -> Option<&DweatCell> {
        self.cells.iter().find(|c| c.set == set && c.tau == tau && c.gamma == gamma)
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let opt = |x: Option<f64>| x.map(|v| v.to_string()).unwrap_or_default();
        let mut wtr = csv::Writer::from_writer(w);
        wtr.write_record(["set", "tau", "gamma", "c_w", "c_m", "ties", "samples_kept", "pct_w", "pct_m", "divergent"])?;
        for c in &self.cells {
            wtr.write_record([
                c.set.label().to_string(),
                c.tau.to_string(),
                c.gamma.to_string(),
                c.c_w.to_string(),
                c.c_m.to_string(),
                c.ties.to_string(),
                c.samples_kept.to_string(),
                opt(c.pct_w),
                opt(c.pct_m),
                c.divergent.to_string(),
            ])?;
        }
        wtr.flush().map_err(|e| Error::io("<dweat csv>", e))?;
        Ok(())
    }
}

/// A scored pair: its swap count and outcome under both semantics.
struct Scored {
    gamma: usize,
    chosen: CounterOutcome,
    divergent: bool,
}

fn percentages(c_w: usize, c_m: usize) -> (Option<f64>, Option<f64>) {
    let total = c_w + c_m;
    if total == 0 {
        return (None, None);
    }
    let t = total as f64;
    (Some(100.0 * c_w as f64 / t), Some(100.0 * c_m as f64 / t))
}

fn mean(xs: impl Iterator<Item = f64>) -> Option<f64> {
    let (sum, n) = xs.fold((0.0, 0usize), |(s, n), x| (s + x, n + 1));
    (n > 0).then(|| sum / n as f64)
}

/// Segment pairs for one (set, tau, seed).
fn collect_pairs(
    records: &[EpisodeRecord],
    lists: &WordLists,
    set: GenderSet,
    tau: f64,
    seed: u64,
    gamma_min: usize,
    config: &SweepConfig,
) -> Result<(usize, Vec<SegmentPair>)> {
    let (src, dst) = match set {
        GenderSet::Women => (&lists.t_w, &lists.t_m),
        GenderSet::Men => (&lists.t_m, &lists.t_w),
    };
    let sample = build_sample_set(records, set, tau, config.n_podcasts, seed)?;
    let sampled = sample.len();
    let mut pairs = Vec::new();
    for rec in sample {
        let segs = extract_segments(rec, config.segments_per_podcast, config.sentences_per_segment, seed);
        for (i, seg) in segs.iter().enumerate() {
            let swap_seed = derive_seed(seed, &["swap", &rec.episode_id, &i.to_string()]);
            if let SwapOutcome::Kept(p) = swap_words(&rec.episode_id, seg, src, dst, gamma_min, swap_seed)? {
                pairs.push(p);
            }
        }
    }
    Ok((sampled, pairs))
}

/// Runs the full tau x gamma x seed grid for both sample sets.
pub fn run_sweep(
    records: &[EpisodeRecord],
    lists: &WordLists,
    embedder: &CachedEmbedder,
    config: &SweepConfig,
) -> Result<DweatReport> {
    if config.taus.is_empty() || config.gammas.is_empty() {
        return Err(Error::Invalid("tau and gamma grids must be nonempty".into()));
    }
    if config.seeds.is_empty() {
        return Err(Error::Invalid("at least one seed is required".into()));
    }
    if config.repeats == 0 {
        return Err(Error::Invalid("repeats must be at least 1".into()));
    }
    lists.validate()?;
    let attrs = AttributeEmbeddings::fetch(embedder, lists)?;
    let gamma_min = *config.gammas.iter().min().unwrap();

    let mut cells = Vec::new();
    let mut errors = Vec::new();
    let mut notes = Vec::new();
    for set in [GenderSet::Women, GenderSet::Men] {
        for &tau in &config.taus {
            let mut per_seed: Vec<(u64, Vec<Scored>)> = Vec::new();
            for &seed in &config.seeds {
                let pairs = match collect_pairs(records, lists, set, tau, seed, gamma_min, config) {
                    Ok((sampled, p)) => {
                        let note = format!(
                            "{}: {sampled} episodes meet tau = {tau}, {} requested",
                            set.label(),
                            config.n_podcasts
                        );
                        if sampled < config.n_podcasts && !notes.contains(&note) {
                            log::warn!("{note}");
                            notes.push(note);
                        }
                        p
                    }
                    Err(Error::NoQualifiers { .. }) => {
                        let note = format!("{}: no episodes meet tau = {tau}", set.label());
                        if !notes.contains(&note) {
                            notes.push(note);
                        }
                        Vec::new()
                    }
                    Err(e) => return Err(e),
                };
                if !pairs.is_empty() {
                    let texts: Vec<String> = pairs
                        .iter()
                        .flat_map(|p| [p.s.clone(), p.s_prime.clone()])
                        .collect::<BTreeSet<_>>()
                        .into_iter()
                        .collect();
                    for r in 0..config.repeats {
                        // batch prefetch; failures are isolated per pair below
                        if let Err(e) = embedder.embed(&texts, r) {
                            log::warn!("batch embedding failed, retrying per segment: {e}");
                            break;
                        }
                    }
                }
                let mut scored = Vec::with_capacity(pairs.len());
                for p in &pairs {
                    match movement_deltas(p, &attrs, embedder, config.repeats) {
                        Ok(delta) => {
                            let eq = update_counters(&delta, Semantics::Equation);
                            let prose = update_counters(&delta, Semantics::Prose);
                            let chosen = if config.semantics == Semantics::Equation { eq } else { prose };
                            scored.push(Scored { gamma: p.gamma, chosen, divergent: eq != prose });
                        }
                        Err(e) => errors.push(SegmentError {
                            set,
                            tau,
                            seed,
                            episode_id: p.episode_id.clone(),
                            text_hash: content_hash(&p.s),
                            message: e.to_string(),
                        }),
                    }
                }
                per_seed.push((seed, scored));
            }

            let mut gammas = config.gammas.clone();
            gammas.sort_unstable();
            gammas.dedup();
            for gamma in gammas {
                let mut cell = DweatCell {
                    set,
                    tau,
                    gamma,
                    c_w: 0,
                    c_m: 0,
                    ties: 0,
                    samples_kept: 0,
                    pct_w: None,
                    pct_m: None,
                    divergent: 0,
                    per_seed: Vec::new(),
                };
                for (seed, scored) in &per_seed {
                    let mut sc = SeedCounts { seed: *seed, c_w: 0, c_m: 0, ties: 0, samples_kept: 0, pct_w: None, pct_m: None };
                    for s in scored.iter().filter(|s| s.gamma >= gamma) {
                        sc.samples_kept += 1;
                        match s.chosen {
                            CounterOutcome::IncrementW => sc.c_w += 1,
                            CounterOutcome::IncrementM => sc.c_m += 1,
                            CounterOutcome::Tie => sc.ties += 1,
                        }
                        cell.divergent += s.divergent as usize;
                    }
                    (sc.pct_w, sc.pct_m) = percentages(sc.c_w, sc.c_m);
                    cell.c_w += sc.c_w;
                    cell.c_m += sc.c_m;
                    cell.ties += sc.ties;
                    cell.samples_kept += sc.samples_kept;
                    cell.per_seed.push(sc);
                }
                cell.pct_w = mean(cell.per_seed.iter().filter_map(|s| s.pct_w));
                cell.pct_m = mean(cell.per_seed.iter().filter_map(|s| s.pct_m));
                cells.push(cell);
            }
        }
    }

    Ok(DweatReport {
        provider_id: embedder.provider().provider_id().to_string(),
        model_id: embedder.provider().model_id().to_string(),
        lists: lists.clone(),
        config: config.clone(),
        cells,
        errors,
        notes,
    })
}
