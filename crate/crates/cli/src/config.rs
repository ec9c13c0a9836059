use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::{Deserialize, Serialize};

use moodcap_core::dsp::DspConfig;
use moodcap_core::events::{ParseMode, UnknownLabelPolicy};
use moodcap_core::prompting::LlmConfig;
use moodcap_core::regression::TrainConfig;

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub dsp: DspConfig,
    pub regression: TrainConfig,
    pub circumplex: CircumplexOptions,
    pub events: EventsOptions,
    pub prompting: PromptingOptions,
    pub paths: Paths,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CircumplexOptions {
    /// Frozen magnitude distribution to rank against instead of the labeled corpus.
    pub reference_distribution: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EventsOptions {
    pub mode: ParseMode,
    pub unknown_labels: UnknownLabelPolicy,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum BackendKind {
    #[default]
    Http,
    Mock,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PromptingOptions {
    pub backend: BackendKind,
    /// Send "chaotic" rather than "highly chaotic".
    pub unqualified_mood: bool,
    pub llm: LlmConfig,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Paths {
    pub audio_dir: Option<PathBuf>,
    pub labels: Option<PathBuf>,
    pub strong_labels: Option<PathBuf>,
    pub ontology: Option<PathBuf>,
    pub features: Option<PathBuf>,
    pub model: Option<PathBuf>,
    pub affects: Option<PathBuf>,
    pub emotions: Option<PathBuf>,
    pub distribution: Option<PathBuf>,
    pub events: Option<PathBuf>,
    pub records: Option<PathBuf>,
    pub manifest: Option<PathBuf>,
}

impl PipelineConfig {
    /// Parses a TOML file; relative paths inside it are taken relative to the file.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
        let mut cfg: PipelineConfig = toml::from_str(&text).with_context(|| format!("parsing config {}", path.display()))?;
        let base = path.parent().unwrap_or(Path::new(""));
        cfg.resolve(base);
        cfg.dsp.validate().context("dsp config")?;
        cfg.prompting.llm.validate().context("prompting.llm config")?;
        Ok(cfg)
    }

    fn resolve(&mut self, base: &Path) {
        let fix = |p: &mut Option<PathBuf>| {
            if let Some(x) = p.as_mut() {
                if x.is_relative() {
                    *x = base.join(&*x);
                }
            }
        };
        let p = &mut self.paths;
        for slot in [
            &mut p.audio_dir,
            &mut p.labels,
            &mut p.strong_labels,
            &mut p.ontology,
            &mut p.features,
            &mut p.model,
            &mut p.affects,
            &mut p.emotions,
            &mut p.distribution,
            &mut p.events,
            &mut p.records,
            &mut p.manifest,
        ] {
            fix(slot);
        }
        fix(&mut self.circumplex.reference_distribution);
        fix(&mut self.prompting.llm.cache_dir);
    }
}

/// Config for the bundled fixture; paths are relative to the fixture directory.
pub const FIXTURE_CONFIG: &str = r#"# Settings for the bundled synthetic fixture.

[regression]
folds = 5

[regression.grid]
c = [1.0, 10.0]
gamma = ["scale", 0.1]
kernel = ["rbf", "linear"]
k_pca = [2, 4, 6]
epsilon = 0.05

[prompting]
backend = "mock"

[prompting.llm]
cache_dir = "out/cache"
max_in_flight = 4

[paths]
audio_dir = "audio"
labels = "labels.csv"
strong_labels = "strong_labels.tsv"
ontology = "ontology.json"
features = "out/features.jsonl"
model = "out/model.json"
affects = "out/affects.jsonl"
emotions = "out/emotions.jsonl"
distribution = "out/distribution.json"
events = "out/events.jsonl"
records = "out/records.jsonl"
manifest = "out/manifest.json"
"#;
