use std::collections::BTreeSet;
use std::path::PathBuf;
use std::time::Duration;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::backend::{BackendError, ChatBackend};
use super::cache::{cache_key, CacheEntry, CaptionCache};
use super::{extract_caption, render_prompt, CaptionResult, ChatExchange, ChatMessage, PromptError, PromptVariant};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RetryPolicy {
    pub max_attempts: u32,
    pub backoff_base_ms: u64,
    pub backoff_max_ms: u64,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        RetryPolicy { max_attempts: 4, backoff_base_ms: 500, backoff_max_ms: 30_000 }
    }
}

impl RetryPolicy {
    /// Wait after the `attempt`-th failure (1-based): base * 2^(attempt-1), capped.
    pub fn delay(&self, attempt: u32) -> Duration {
        let ms = self.backoff_base_ms.saturating_mul(1u64 << (attempt.saturating_sub(1)).min(32));
        Duration::from_millis(ms.min(self.backoff_max_ms))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LlmConfig {
    pub endpoint: String,
    pub model: String,
    pub temperature: f64,
    pub max_in_flight: usize,
    pub retry: RetryPolicy,
    pub cache_dir: Option<PathBuf>,
    /// Environment variable holding the API key.
    pub api_key_env: String,
    pub timeout_secs: u64,
    /// Return an error on the first failed clip instead of recording it.
    pub fail_fast: bool,
    /// Ignore cached permanent failures and ask the endpoint again.
    pub retry_failed: bool,
}

impl Default for LlmConfig {
    fn default() -> Self {
        LlmConfig {
            endpoint: "https://api.openai.com/v1/chat/completions".into(),
            model: "gpt-3.5-turbo".into(),
            temperature: 1.0,
            max_in_flight: 4,
            retry: RetryPolicy::default(),
            cache_dir: None,
            api_key_env: "OPENAI_API_KEY".into(),
            timeout_secs: 60,
            fail_fast: false,
            retry_failed: false,
        }
    }
}

impl LlmConfig {
    pub fn validate(&self) -> Result<(), GenerateError> {
        let bad = |m: &str| Err(GenerateError::Config(m.into()));
        if self.max_in_flight == 0 {
            return bad("max_in_flight must be at least 1");
        }
        if self.retry.max_attempts == 0 {
            return bad("retry.max_attempts must be at least 1");
        }
        if !(0.0..=2.0).contains(&self.temperature) {
            return bad("temperature must lie in [0, 2]");
        }
        Ok(())
    }
}

#[derive(Debug, Error)]
pub enum GenerateError {
    #[error("request failed after {attempts} attempt(s){}: {error}", if *.cached { " (cached failure)" } else { "" })]
    Failed { error: BackendError, attempts: u32, cached: bool },
    #[error(transparent)]
    Prompt(#[from] PromptError),
    #[error("cache: {0}")]
    Cache(#[from] std::io::Error),
    #[error("duplicate clip id {0}")]
    DuplicateClip(String),
    #[error("llm config: {0}")]
    Config(String),
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct RequestStats {
    pub cache_hits: u32,
    pub network_calls: u32,
    pub retries: u32,
}

fn request(
    backend: &dyn ChatBackend,
    cfg: &LlmConfig,
    cache: Option<&CaptionCache>,
    variant: PromptVariant,
    messages: &[ChatMessage],
    stats: &mut RequestStats,
) -> Result<String, GenerateError> {
    let key = cache_key(variant, messages, &cfg.model, cfg.temperature);
    match cache.and_then(|c| c.get(&key)) {
        Some(CacheEntry::Ok { reply }) => {
            stats.cache_hits += 1;
            return Ok(reply);
        }
        Some(CacheEntry::Failed { http_status, message, attempts }) if !cfg.retry_failed => {
            stats.cache_hits += 1;
            return Err(GenerateError::Failed {
                error: BackendError::Permanent { status: http_status, message },
                attempts,
                cached: true,
            });
        }
        _ => {}
    }

    let mut attempt = 0;
    loop {
        attempt += 1;
        stats.network_calls += 1;
        let outcome = backend.complete(messages, &cfg.model, cfg.temperature).and_then(|reply| {
            if extract_caption(&reply).is_empty() {
                Err(BackendError::Transient { status: None, message: "empty completion".into() })
            } else {
                Ok(reply)
            }
        });
        match outcome {
            Ok(reply) => {
                if let Some(c) = cache {
                    c.put(&key, &CacheEntry::Ok { reply: reply.clone() })?;
                }
                return Ok(reply);
            }
            Err(e) if e.is_transient() && attempt < cfg.retry.max_attempts => {
                log::debug!("attempt {attempt} failed, retrying: {e}");
                stats.retries += 1;
                std::thread::sleep(cfg.retry.delay(attempt));
            }
            Err(error) => {
                if let (Some(c), BackendError::Permanent { status, message }) = (cache, &error) {
                    c.put(&key, &CacheEntry::Failed { http_status: *status, message: message.clone(), attempts: attempt })?;
                }
                return Err(GenerateError::Failed { error, attempts: attempt, cached: false });
            }
        }
    }
}

/// Sends one exchange (through the cache) and validates the reply.
pub fn generate(
    backend: &dyn ChatBackend,
    cfg: &LlmConfig,
    cache: Option<&CaptionCache>,
    clip_id: &str,
    exchange: &ChatExchange,
) -> Result<(CaptionResult, RequestStats), GenerateError> {
    let mut stats = RequestStats::default();
    let reply = request(backend, cfg, cache, exchange.variant, &exchange.messages, &mut stats)?;
    Ok((CaptionResult::new(clip_id, exchange.variant, extract_caption(&reply)), stats))
}

/// One clip's inputs for a batch run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CaptionJob {
    pub clip_id: String,
    pub events: Vec<String>,
    pub mood: Option<String>,
    /// For `emotion_rewrite`; when absent the scene-focused caption is
    /// generated first (sharing the scene-focused cache entries).
    pub prior_caption: Option<String>,
}

fn run_job(
    backend: &dyn ChatBackend,
    cfg: &LlmConfig,
    cache: Option<&CaptionCache>,
    variant: PromptVariant,
    job: &CaptionJob,
) -> (Result<CaptionResult, GenerateError>, RequestStats) {
    let mut stats = RequestStats::default();
    let result = (|| {
        let mood = job.mood.as_deref();
        let prior = match (variant, &job.prior_caption) {
            (PromptVariant::EmotionRewrite, None) => {
                let scene = render_prompt(PromptVariant::SceneFocused, &job.events, None, None)?;
                Some(extract_caption(&request(backend, cfg, cache, scene.variant, &scene.messages, &mut stats)?))
            }
            (_, p) => p.clone(),
        };
        let exchange = render_prompt(variant, &job.events, mood, prior.as_deref())?;
        let reply = request(backend, cfg, cache, exchange.variant, &exchange.messages, &mut stats)?;
        Ok(CaptionResult::new(&job.clip_id, variant, extract_caption(&reply)))
    })();
    (result, stats)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FailureRecord {
    pub clip_id: String,
    pub message: String,
}

/// Counts for one batch run; `requested = cached + fetched + failed`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunManifest {
    pub variant: PromptVariant,
    pub requested: usize,
    /// Served entirely from the cache.
    pub cached: usize,
    pub fetched: usize,
    pub failed: usize,
    /// Successful captions with at least one validation flag.
    pub flagged: usize,
    pub retries: u64,
    pub network_calls: u64,
    pub failures: Vec<FailureRecord>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CorpusRun {
    /// Sorted by clip id.
    pub results: Vec<CaptionResult>,
    pub manifest: RunManifest,
}

/// Runs every job with at most `cfg.max_in_flight` concurrent requests.
/// Output order is by clip id whatever the completion order.
pub fn generate_corpus(
    backend: &dyn ChatBackend,
    cfg: &LlmConfig,
    cache: Option<&CaptionCache>,
    variant: PromptVariant,
    mut jobs: Vec<CaptionJob>,
) -> Result<CorpusRun, GenerateError> {
    cfg.validate()?;
    jobs.sort_by(|a, b| a.clip_id.cmp(&b.clip_id));
    let mut ids = BTreeSet::new();
    for j in &jobs {
        if !ids.insert(j.clip_id.as_str()) {
            return Err(GenerateError::DuplicateClip(j.clip_id.clone()));
        }
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.max_in_flight)
        .build()
        .map_err(|e| GenerateError::Config(e.to_string()))?;
    let outcomes: Vec<_> = pool.install(|| jobs.par_iter().map(|j| run_job(backend, cfg, cache, variant, j)).collect());

    let mut manifest = RunManifest {
        variant,
        requested: jobs.len(),
        cached: 0,
        fetched: 0,
        failed: 0,
        flagged: 0,
        retries: 0,
        network_calls: 0,
        failures: Vec::new(),
    };
    let mut results = Vec::with_capacity(jobs.len());
    for (job, (outcome, stats)) in jobs.iter().zip(outcomes) {
        manifest.retries += u64::from(stats.retries);
        manifest.network_calls += u64::from(stats.network_calls);
        match outcome {
            Ok(r) => {
                if stats.network_calls == 0 {
                    manifest.cached += 1;
                } else {
                    manifest.fetched += 1;
                }
                manifest.flagged += usize::from(r.flags.any());
                results.push(r);
            }
            Err(e) if cfg.fail_fast => return Err(e),
            Err(e) => {
                log::warn!("clip {} failed: {e}", job.clip_id);
                manifest.failed += 1;
                manifest.failures.push(FailureRecord { clip_id: job.clip_id.clone(), message: e.to_string() });
            }
        }
    }
    Ok(CorpusRun { results, manifest })
}
