use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Duration;

use anyhow::{bail, Context, Result};
use rayon::prelude::*;
use walkdir::WalkDir;

use moodcap_core::circumplex::{qualify_corpus, qualify_with, AffectPoint, EmotionRecord, MagnitudeDistribution};
use moodcap_core::dataset::{assemble, caption_stats, read_caption_texts, read_records, stats_table, subset_stats, write_records};
use moodcap_core::dsp::{extract_features, load_wav, read_features_jsonl, write_features_csv, write_features_jsonl, FeatureVector};
use moodcap_core::events::{build_corpus_timelines, read_ontology, read_strong_labels, read_timelines_jsonl, write_timelines_jsonl};
use moodcap_core::fixture::write_fixture;
use moodcap_core::jsonl::{read_jsonl, write_jsonl};
use moodcap_core::prompting::{
    generate_corpus, render_prompt, CaptionCache, CaptionJob, ChatBackend, HttpBackend, MockBackend, PromptVariant,
};
use moodcap_core::regression::{
    evaluate_trials, fit_ser, read_labels_csv, AffectDataset, AffectPrediction, GridSearchResult, SerModel,
};

use crate::config::{BackendKind, PipelineConfig, FIXTURE_CONFIG};

/// Signals a completed run that still must exit nonzero.
#[derive(Debug)]
pub struct PartialFailure(pub String);

impl std::fmt::Display for PartialFailure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for PartialFailure {}

pub fn need(arg: Option<PathBuf>, fallback: &Option<PathBuf>, flag: &str, key: &str) -> Result<PathBuf> {
    arg.or_else(|| fallback.clone()).with_context(|| format!("missing {flag} (or paths.{key} in the config)"))
}

fn ensure_parent(path: &Path) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    Ok(())
}

fn write_json<T: serde::Serialize>(path: &Path, value: &T) -> Result<()> {
    ensure_parent(path)?;
    let text = serde_json::to_string_pretty(value)? + "\n";
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

fn clip_id_for(root: &Path, file: &Path) -> String {
    let rel = file.strip_prefix(root).unwrap_or(file).with_extension("");
    rel.components().map(|c| c.as_os_str().to_string_lossy()).collect::<Vec<_>>().join("/")
}

pub fn extract(cfg: &PipelineConfig, audio_dir: &Path, out: &Path, csv: Option<&Path>) -> Result<usize> {
    cfg.dsp.validate()?;
    let files: Vec<PathBuf> = WalkDir::new(audio_dir)
        .sort_by_file_name()
        .into_iter()
        .collect::<Result<Vec<_>, _>>()
        .with_context(|| format!("walking {}", audio_dir.display()))?
        .into_iter()
        .filter(|e| e.file_type().is_file())
        .map(|e| e.into_path())
        .filter(|p| p.extension().is_some_and(|x| x.eq_ignore_ascii_case("wav")))
        .collect();
    if files.is_empty() {
        bail!("no .wav files under {}", audio_dir.display());
    }
    let mut vectors: Vec<FeatureVector> = files
        .par_iter()
        .map(|f| -> Result<FeatureVector> {
            let w = load_wav(f).with_context(|| format!("loading {}", f.display()))?;
            let w = if w.sample_rate() == cfg.dsp.sample_rate { w } else { w.resample(cfg.dsp.sample_rate)? };
            extract_features(&clip_id_for(audio_dir, f), &w, &cfg.dsp).with_context(|| format!("features of {}", f.display()))
        })
        .collect::<Result<_>>()?;
    vectors.sort_by(|a, b| a.clip_id.cmp(&b.clip_id));
    ensure_parent(out)?;
    write_features_jsonl(out, &vectors)?;
    if let Some(csv) = csv {
        ensure_parent(csv)?;
        write_features_csv(csv, &vectors)?;
    }
    Ok(vectors.len())
}

fn load_dataset(features: &Path, labels: &Path) -> Result<AffectDataset> {
    let f = read_features_jsonl(features).with_context(|| format!("reading {}", features.display()))?;
    let l = read_labels_csv(labels).with_context(|| format!("reading {}", labels.display()))?;
    let ds = AffectDataset::join(&f, &l)?;
    if ds.is_empty() {
        bail!("no clip appears in both {} and {}", features.display(), labels.display());
    }
    Ok(ds)
}

fn describe(name: &str, g: &GridSearchResult) -> String {
    let p = &g.best_params;
    format!(
        "{name}: kernel={:?} C={} gamma={} epsilon={} k_pca={} cv_mse={:.6}",
        p.kernel, p.c, p.gamma, p.epsilon, g.best_k_pca, g.best_mse
    )
    .to_lowercase()
}

pub fn train(cfg: &PipelineConfig, features: &Path, labels: &Path, out: &Path, seed: u64, summary: Option<&Path>) -> Result<String> {
    let ds = load_dataset(features, labels)?;
    let (model, s) = fit_ser(&ds.features, &ds.valence, &ds.arousal, &cfg.regression, seed)?;
    ensure_parent(out)?;
    fs::write(out, model.to_json() + "\n").with_context(|| format!("writing {}", out.display()))?;
    if let Some(p) = summary {
        write_json(p, &s)?;
    }
    Ok(format!("{}\n{}\n", describe("valence", &s.valence), describe("arousal", &s.arousal)))
}

pub fn eval(cfg: &PipelineConfig, features: &Path, labels: &Path, trials: usize, seed: u64, out: Option<&Path>) -> Result<String> {
    let ds = load_dataset(features, labels)?;
    let summary = evaluate_trials(&ds, trials, seed, &cfg.regression)?;
    if let Some(p) = out {
        write_json(p, &summary)?;
    }
    Ok(summary.table())
}

pub fn predict(model: &Path, features: &Path, out: &Path) -> Result<usize> {
    let text = fs::read_to_string(model).with_context(|| format!("reading {}", model.display()))?;
    let m = SerModel::from_json(&text)?;
    let mut f = read_features_jsonl(features)?;
    f.sort_by(|a, b| a.clip_id.cmp(&b.clip_id));
    let preds: Vec<AffectPrediction> = f
        .iter()
        .map(|v| {
            m.predict_row(&v.values)
                .map(|(valence, arousal)| AffectPrediction { clip_id: v.clip_id.clone(), valence, arousal })
                .with_context(|| format!("predicting {}", v.clip_id))
        })
        .collect::<Result<_>>()?;
    ensure_parent(out)?;
    write_jsonl(out, &preds)?;
    Ok(preds.len())
}

pub fn label(affects: &Path, out: &Path, reference: Option<&Path>, distribution_out: Option<&Path>) -> Result<usize> {
    let mut preds: Vec<AffectPrediction> = read_jsonl(affects)?;
    preds.sort_by(|a, b| a.clip_id.cmp(&b.clip_id));
    let points: Vec<AffectPoint> = preds
        .iter()
        .map(|p| AffectPoint::new(p.valence, p.arousal).with_context(|| format!("clip {}", p.clip_id)))
        .collect::<Result<_>>()?;
    let (qualified, dist) = match reference {
        Some(r) => {
            let text = fs::read_to_string(r).with_context(|| format!("reading {}", r.display()))?;
            let d: MagnitudeDistribution = serde_json::from_str(&text).with_context(|| format!("parsing {}", r.display()))?;
            let d = MagnitudeDistribution::new(d.magnitudes().to_vec())?;
            (qualify_with(&points, &d), Some(d))
        }
        None => qualify_corpus(&points),
    };
    let records: Vec<EmotionRecord> =
        preds.iter().zip(&points).zip(&qualified).map(|((p, a), q)| EmotionRecord::new(&p.clip_id, *a, q)).collect();
    ensure_parent(out)?;
    write_jsonl(out, &records)?;
    if let (Some(path), Some(d)) = (distribution_out, dist) {
        write_json(path, &d)?;
    }
    Ok(records.len())
}

pub fn build_events(cfg: &PipelineConfig, tsv: &Path, ontology: &Path, out: &Path) -> Result<(usize, usize)> {
    let labels = read_strong_labels(tsv, cfg.events.mode)?;
    let ont = read_ontology(ontology)?;
    let timelines = build_corpus_timelines(&labels.segments, &ont, cfg.events.unknown_labels)?;
    let list: Vec<_> = timelines.into_values().collect();
    ensure_parent(out)?;
    write_timelines_jsonl(out, &list)?;
    Ok((list.len(), labels.skipped))
}

pub struct GenArgs<'a> {
    pub events: &'a Path,
    pub emotions: &'a Path,
    pub variant: PromptVariant,
    pub out: Option<&'a Path>,
    pub manifest: Option<&'a Path>,
    pub dry_run: bool,
    pub jobs: Option<usize>,
}

pub fn gen_captions(cfg: &PipelineConfig, a: GenArgs) -> Result<String> {
    let timelines = read_timelines_jsonl(a.events)?;
    let emotions: Vec<EmotionRecord> = read_jsonl(a.emotions)?;
    let by_id: BTreeMap<&str, &EmotionRecord> = emotions.iter().map(|e| (e.clip_id.as_str(), e)).collect();
    let jobs: Vec<CaptionJob> = timelines
        .iter()
        .filter_map(|t| {
            let e = by_id.get(t.clip_id.as_str())?;
            let mood = a.variant.needs_mood().then(|| {
                if cfg.prompting.unqualified_mood {
                    e.qualified().unqualified_text()
                } else {
                    e.text.clone()
                }
            });
            Some(CaptionJob { clip_id: t.clip_id.clone(), events: t.events.clone(), mood, prior_caption: None })
        })
        .collect();
    if jobs.len() < timelines.len() {
        log::warn!("{} timeline(s) have no emotion record and were skipped", timelines.len() - jobs.len());
    }

    if a.dry_run {
        let mut out = String::new();
        for j in &jobs {
            let prior = (a.variant == PromptVariant::EmotionRewrite).then_some("<scene_focused caption>");
            let x = render_prompt(a.variant, &j.events, j.mood.as_deref(), prior)
                .with_context(|| format!("clip {}", j.clip_id))?;
            out.push_str(&serde_json::to_string(&serde_json::json!({ "clip_id": j.clip_id, "exchange": x }))?);
            out.push('\n');
        }
        return Ok(out);
    }

    let out = a.out.context("missing --out (or paths.records in the config)")?;
    let mut llm = cfg.prompting.llm.clone();
    if let Some(n) = a.jobs {
        llm.max_in_flight = n;
    }
    let backend: Box<dyn ChatBackend> = match cfg.prompting.backend {
        BackendKind::Mock => Box::new(MockBackend::new()),
        BackendKind::Http => {
            let key = std::env::var(&llm.api_key_env).ok();
            if key.is_none() {
                log::warn!("{} is not set; sending requests without an API key", llm.api_key_env);
            }
            Box::new(HttpBackend::new(llm.endpoint.clone(), key, Duration::from_secs(llm.timeout_secs)))
        }
    };
    let cache = llm.cache_dir.as_ref().map(CaptionCache::open).transpose().context("opening caption cache")?;
    let run = generate_corpus(backend.as_ref(), &llm, cache.as_ref(), a.variant, jobs)?;
    let assembled = assemble(&timelines, &emotions, &run.results, a.variant)?;
    ensure_parent(out)?;
    write_records(out, &assembled.records)?;
    if let Some(m) = a.manifest {
        write_json(m, &run.manifest)?;
    }
    let m = &run.manifest;
    let line = format!(
        "requested={} cached={} fetched={} failed={} flagged={} retries={}",
        m.requested, m.cached, m.fetched, m.failed, m.flagged, m.retries
    );
    if m.failed > 0 {
        return Err(PartialFailure(format!("{} of {} clips failed ({line})", m.failed, m.requested)).into());
    }
    Ok(line)
}

pub fn stats(records: &[PathBuf], caption_field: Option<&str>, out: Option<&Path>) -> Result<String> {
    let mut all = Vec::new();
    for p in records {
        let name = p.file_stem().map_or_else(|| p.display().to_string(), |s| s.to_string_lossy().into_owned());
        let s = match caption_field {
            Some(field) => caption_stats(None, &read_caption_texts(p, field)?),
            None => subset_stats(&read_records(p)?).with_context(|| format!("stats of {}", p.display()))?,
        };
        all.push((name, s));
    }
    if let Some(o) = out {
        let map: BTreeMap<&str, _> = all.iter().map(|(n, s)| (n.as_str(), s)).collect();
        write_json(o, &map)?;
    }
    Ok(stats_table(&all))
}

pub fn make_fixture(dir: &Path, seed: u64) -> Result<()> {
    write_fixture(dir, seed).with_context(|| format!("writing fixture to {}", dir.display()))?;
    fs::write(dir.join("moodcap.toml"), FIXTURE_CONFIG)?;
    Ok(())
}
