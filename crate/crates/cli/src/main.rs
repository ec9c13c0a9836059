mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};

use commands::{need, GenArgs, PartialFailure};
use config::{BackendKind, PipelineConfig};
use moodcap_core::prompting::PromptVariant;

#[derive(Parser)]
#[command(name = "moodcap", version, about = "Soundscape affect estimation and emotion-augmented caption generation")]
struct Cli {
    /// TOML pipeline config; relative paths in it resolve against its directory.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Worker threads for extraction, grid search and trials; in-flight LLM requests.
    #[arg(long, global = true)]
    jobs: Option<usize>,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Summarize every .wav under a directory into 72-dim feature vectors.
    ExtractFeatures {
        #[arg(long)]
        audio_dir: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Also write a CSV copy.
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Grid-search and fit the valence/arousal model.
    TrainSer {
        #[arg(long)]
        features: Option<PathBuf>,
        #[arg(long)]
        labels: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Write the CV tables as JSON.
        #[arg(long)]
        summary: Option<PathBuf>,
    },
    /// Repeated 80/20 evaluation; prints mean and SD of R2 and MSE.
    EvalSer {
        #[arg(long)]
        features: Option<PathBuf>,
        #[arg(long)]
        labels: Option<PathBuf>,
        #[arg(long, default_value_t = 100)]
        trials: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    PredictAffect {
        #[arg(long)]
        model: Option<PathBuf>,
        #[arg(long)]
        features: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Qualified emotion per clip from predicted affect.
    LabelEmotions {
        #[arg(long)]
        affects: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Where to save the magnitude distribution.
        #[arg(long)]
        distribution_out: Option<PathBuf>,
        /// Rank against a saved distribution instead of this corpus.
        #[arg(long)]
        reference_distribution: Option<PathBuf>,
    },
    /// Ordered, deduplicated event lists from strong labels.
    BuildEvents {
        #[arg(long)]
        tsv: Option<PathBuf>,
        #[arg(long)]
        ontology: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    GenCaptions {
        #[arg(long)]
        events: Option<PathBuf>,
        #[arg(long)]
        emotions: Option<PathBuf>,
        #[arg(long, value_parser = parse_variant)]
        variant: PromptVariant,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        manifest: Option<PathBuf>,
        /// Print rendered prompts as JSON lines and exit.
        #[arg(long)]
        dry_run: bool,
        #[arg(long, value_enum)]
        backend: Option<BackendKind>,
        #[arg(long)]
        unqualified_mood: bool,
        #[arg(long)]
        cache_dir: Option<PathBuf>,
    },
    /// Word-count statistics per subset file.
    Stats {
        records: Vec<PathBuf>,
        /// Read captions from this field of arbitrary JSON/JSONL objects.
        #[arg(long)]
        caption_field: Option<String>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Write the synthetic offline fixture and its config.
    MakeFixture {
        #[arg(long)]
        out: PathBuf,
    },
}

fn parse_variant(s: &str) -> Result<PromptVariant, String> {
    s.parse().map_err(|e: moodcap_core::prompting::PromptError| e.to_string())
}

impl Cmd {
    fn name(&self) -> &'static str {
        match self {
            Cmd::ExtractFeatures { .. } => "extract-features",
            Cmd::TrainSer { .. } => "train-ser",
            Cmd::EvalSer { .. } => "eval-ser",
            Cmd::PredictAffect { .. } => "predict-affect",
            Cmd::LabelEmotions { .. } => "label-emotions",
            Cmd::BuildEvents { .. } => "build-events",
            Cmd::GenCaptions { .. } => "gen-captions",
            Cmd::Stats { .. } => "stats",
            Cmd::MakeFixture { .. } => "make-fixture",
        }
    }
}

fn run(cli: Cli) -> Result<()> {
    let mut cfg = match &cli.config {
        Some(p) => PipelineConfig::load(p)?,
        None => PipelineConfig::default(),
    };
    if let Some(n) = cli.jobs {
        if n == 0 {
            anyhow::bail!("--jobs must be at least 1");
        }
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global().context("configuring worker threads")?;
    }
    let p = cfg.paths.clone();
    match cli.cmd {
        Cmd::ExtractFeatures { audio_dir, out, csv } => {
            let dir = need(audio_dir, &p.audio_dir, "--audio-dir", "audio_dir")?;
            let out = need(out, &p.features, "--out", "features")?;
            let n = commands::extract(&cfg, &dir, &out, csv.as_deref())?;
            eprintln!("extracted {n} clips -> {}", out.display());
        }
        Cmd::TrainSer { features, labels, out, summary } => {
            let f = need(features, &p.features, "--features", "features")?;
            let l = need(labels, &p.labels, "--labels", "labels")?;
            let out = need(out, &p.model, "--out", "model")?;
            print!("{}", commands::train(&cfg, &f, &l, &out, cli.seed, summary.as_deref())?);
        }
        Cmd::EvalSer { features, labels, trials, out } => {
            let f = need(features, &p.features, "--features", "features")?;
            let l = need(labels, &p.labels, "--labels", "labels")?;
            print!("{}", commands::eval(&cfg, &f, &l, trials, cli.seed, out.as_deref())?);
        }
        Cmd::PredictAffect { model, features, out } => {
            let m = need(model, &p.model, "--model", "model")?;
            let f = need(features, &p.features, "--features", "features")?;
            let out = need(out, &p.affects, "--out", "affects")?;
            let n = commands::predict(&m, &f, &out)?;
            eprintln!("predicted {n} clips -> {}", out.display());
        }
        Cmd::LabelEmotions { affects, out, distribution_out, reference_distribution } => {
            let a = need(affects, &p.affects, "--affects", "affects")?;
            let out = need(out, &p.emotions, "--out", "emotions")?;
            let reference = reference_distribution.or(cfg.circumplex.reference_distribution.clone());
            let dist_out = distribution_out.or(p.distribution.clone());
            let n = commands::label(&a, &out, reference.as_deref(), dist_out.as_deref())?;
            eprintln!("labeled {n} clips -> {}", out.display());
        }
        Cmd::BuildEvents { tsv, ontology, out } => {
            let t = need(tsv, &p.strong_labels, "--tsv", "strong_labels")?;
            let o = need(ontology, &p.ontology, "--ontology", "ontology")?;
            let out = need(out, &p.events, "--out", "events")?;
            let (n, skipped) = commands::build_events(&cfg, &t, &o, &out)?;
            eprintln!("built {n} timelines ({skipped} rows skipped) -> {}", out.display());
        }
        Cmd::GenCaptions { events, emotions, variant, out, manifest, dry_run, backend, unqualified_mood, cache_dir } => {
            let e = need(events, &p.events, "--events", "events")?;
            let m = need(emotions, &p.emotions, "--emotions", "emotions")?;
            if let Some(b) = backend {
                cfg.prompting.backend = b;
            }
            cfg.prompting.unqualified_mood |= unqualified_mood;
            if cache_dir.is_some() {
                cfg.prompting.llm.cache_dir = cache_dir;
            }
            let out = out.or(p.records.clone());
            let manifest = manifest.or(p.manifest.clone());
            let args = GenArgs {
                events: &e,
                emotions: &m,
                variant,
                out: out.as_deref(),
                manifest: manifest.as_deref(),
                dry_run,
                jobs: cli.jobs,
            };
            let report = commands::gen_captions(&cfg, args)?;
            if dry_run {
                print!("{report}");
            } else {
                eprintln!("{report}");
            }
        }
        Cmd::Stats { records, caption_field, out } => {
            let records = if records.is_empty() { p.records.clone().into_iter().collect() } else { records };
            if records.is_empty() {
                anyhow::bail!("no record files given (pass paths or set paths.records in the config)");
            }
            print!("{}", commands::stats(&records, caption_field.as_deref(), out.as_deref())?);
        }
        Cmd::MakeFixture { out } => {
            commands::make_fixture(&out, cli.seed)?;
            eprintln!("fixture written to {}", out.display());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let command = cli.cmd.name();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let message = format!("{e:#}").replace('\n', " ");
            eprintln!("{}", serde_json::json!({ "error": { "command": command, "message": message } }));
            if e.is::<PartialFailure>() {
                ExitCode::from(3)
            } else {
                ExitCode::FAILURE
            }
        }
    }
}
