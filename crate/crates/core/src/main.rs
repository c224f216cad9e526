use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use gendisc::dweat::Semantics;
use gendisc::embed::ProviderKind;
use gendisc::pipeline::{run_all, run_stage, write_synthetic_run, RunConfig, Stage, StageOutcome};
use gendisc::{Error, Result};

#[derive(Parser)]
#[command(name = "gendisc", version, about = "Topic-gender correlation and discourse-embedding bias pipeline")]
struct Cli {
    /// TOML run config; relative paths in it resolve against its directory.
    #[arg(short, long, global = true)]
    config: Option<PathBuf>,

    #[command(flatten)]
    overrides: Overrides,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Filter the raw corpus.
    Ingest,
    /// Fit the topic model and score coherence.
    Topics,
    /// Correlate topics with gender and other episode features.
    Correlate,
    /// Derive or import the target word lists.
    Wordlists,
    /// Run the discourse-embedding sweep.
    Dweat,
    /// Aggregate all stage outputs into one summary.
    Report,
    /// All six stages in order.
    Run,
    /// Write a synthetic corpus, vector file and config to a directory.
    Synth {
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 7)]
        seed: u64,
    },
}

/// Flags that override config file values.
#[derive(Args, Default)]
struct Overrides {
    #[arg(long, global = true)]
    corpus: Option<PathBuf>,
    #[arg(long, global = true)]
    output_dir: Option<PathBuf>,
    #[arg(long, global = true)]
    word_lists: Option<PathBuf>,
    #[arg(long, global = true)]
    topic_labels: Option<PathBuf>,
    #[arg(long, global = true)]
    cache_dir: Option<PathBuf>,
    #[arg(long, global = true)]
    vector_file: Option<PathBuf>,
    #[arg(long, global = true, value_parser = parse_kind)]
    provider: Option<ProviderKind>,
    #[arg(long, global = true)]
    base_url: Option<String>,
    #[arg(long, global = true)]
    model_id: Option<String>,
    #[arg(long, global = true)]
    k: Option<usize>,
    #[arg(long, global = true)]
    sweeps: Option<usize>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, global = true)]
    alpha0: Option<f64>,
    #[arg(long, global = true)]
    min_abs_r: Option<f64>,
    #[arg(long, global = true, value_delimiter = ',')]
    taus: Option<Vec<f64>>,
    #[arg(long, global = true, value_delimiter = ',')]
    gammas: Option<Vec<usize>>,
    #[arg(long, global = true, value_delimiter = ',')]
    dweat_seeds: Option<Vec<u64>>,
    #[arg(long, global = true)]
    repeats: Option<u32>,
    #[arg(long, global = true)]
    semantics: Option<Semantics>,
    #[arg(long, global = true)]
    n_podcasts: Option<usize>,
}

fn parse_kind(s: &str) -> std::result::Result<ProviderKind, String> {
    match s {
        "local" => Ok(ProviderKind::Local),
        "remote" => Ok(ProviderKind::Remote),
        _ => Err(format!("unknown provider {s:?} (expected local or remote)")),
    }
}

impl Overrides {
    fn apply(self, cfg: &mut RunConfig) {
        let p = &mut cfg.paths;
        if let Some(v) = self.corpus {
            p.corpus = Some(v);
        }
        if let Some(v) = self.output_dir {
            p.output_dir = v;
        }
        if let Some(v) = self.word_lists {
            p.word_lists = Some(v);
        }
        if let Some(v) = self.topic_labels {
            p.topic_labels = Some(v);
        }
        let pr = &mut cfg.provider;
        if let Some(v) = self.cache_dir {
            pr.cache_dir = Some(v);
        }
        if let Some(v) = self.vector_file {
            pr.vector_file = Some(v);
        }
        if let Some(v) = self.provider {
            pr.kind = v;
        }
        if let Some(v) = self.base_url {
            pr.base_url = Some(v);
        }
        if let Some(v) = self.model_id {
            pr.model_id = v;
        }
        let t = &mut cfg.topics;
        t.k = self.k.unwrap_or(t.k);
        t.sweeps = self.sweeps.unwrap_or(t.sweeps);
        t.seed = self.seed.unwrap_or(t.seed);
        let c = &mut cfg.correlate;
        c.alpha0 = self.alpha0.unwrap_or(c.alpha0);
        c.min_abs_r = self.min_abs_r.unwrap_or(c.min_abs_r);
        let d = &mut cfg.dweat;
        if let Some(v) = self.taus {
            d.taus = v;
        }
        if let Some(v) = self.gammas {
            d.gammas = v;
        }
        if let Some(v) = self.dweat_seeds {
            d.seeds = v;
        }
        d.repeats = self.repeats.unwrap_or(d.repeats);
        d.semantics = self.semantics.unwrap_or(d.semantics);
        d.n_podcasts = self.n_podcasts.unwrap_or(d.n_podcasts);
    }
}

fn print_outcome(o: &StageOutcome) {
    let line = serde_json::json!({
        "stage": o.stage,
        "artifacts": o.artifacts,
        "notes": o.notes,
    });
    println!("{line}");
}

fn execute(cli: Cli) -> Result<()> {
    if let Command::Synth { out, seed } = &cli.command {
        let path = write_synthetic_run(out, *seed)?;
        println!("{}", serde_json::json!({ "config": path }));
        return Ok(());
    }
    let mut cfg = match &cli.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    cli.overrides.apply(&mut cfg);
    let stage = match cli.command {
        Command::Ingest => Stage::Ingest,
        Command::Topics => Stage::Topics,
        Command::Correlate => Stage::Correlate,
        Command::Wordlists => Stage::Wordlists,
        Command::Dweat => Stage::Dweat,
        Command::Report => Stage::Report,
        Command::Run => {
            for o in run_all(&cfg)? {
                print_outcome(&o);
            }
            return Ok(());
        }
        Command::Synth { .. } => unreachable!(),
    };
    print_outcome(&run_stage(stage, &cfg)?);
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let missing = match &e {
                Error::MissingArtifact { path, .. } => Some(path.display().to_string()),
                _ => None,
            };
            let body = serde_json::json!({ "error": e.kind(), "message": e.to_string(), "missing": missing });
            eprintln!("{body}");
            ExitCode::from(if missing.is_some() { 3 } else { 1 })
        }
    }
}
