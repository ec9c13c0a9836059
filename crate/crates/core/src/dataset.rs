//! Joins timelines, emotions and captions into caption records and computes
//! per-subset word statistics.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

use crate::circumplex::EmotionRecord;
use crate::events::EventTimeline;
use crate::jsonl::{read_jsonl, write_jsonl, JsonlError};
use crate::prompting::{validate_caption, word_count, CaptionFlags, CaptionResult, PromptVariant};

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("duplicate clip id {clip_id} in {source_name}")]
    Duplicate { clip_id: String, source_name: &'static str },
    #[error("caption for {clip_id} is {got}, expected {expected}")]
    WrongVariant { clip_id: String, expected: PromptVariant, got: PromptVariant },
    #[error("records mix variants {0} and {1}")]
    MixedVariants(PromptVariant, PromptVariant),
    #[error("no records")]
    Empty,
    #[error("{path}: {message}")]
    Format { path: String, message: String },
    #[error(transparent)]
    Jsonl(#[from] JsonlError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CaptionRecord {
    pub clip_id: String,
    pub events: Vec<String>,
    pub valence: f64,
    pub arousal: f64,
    pub emotion_text: String,
    pub variant: PromptVariant,
    pub caption: String,
    pub num_words: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Assembled {
    /// Sorted by clip id.
    pub records: Vec<CaptionRecord>,
    /// Clip ids present in some input but not all.
    pub skipped: usize,
}

fn index<'a, T>(
    items: &'a [T],
    id: impl Fn(&T) -> &str,
    source_name: &'static str,
) -> Result<HashMap<&'a str, &'a T>, DatasetError> {
    let mut m = HashMap::with_capacity(items.len());
    for it in items {
        let k = id(it);
        if m.insert(k, it).is_some() {
            return Err(DatasetError::Duplicate { clip_id: k.to_string(), source_name });
        }
    }
    Ok(m)
}

/// Inner join on clip id. Every caption must carry `variant`.
pub fn assemble(
    timelines: &[EventTimeline],
    emotions: &[EmotionRecord],
    captions: &[CaptionResult],
    variant: PromptVariant,
) -> Result<Assembled, DatasetError> {
    let t = index(timelines, |x| &x.clip_id, "timelines")?;
    let e = index(emotions, |x| &x.clip_id, "emotions")?;
    let c = index(captions, |x| &x.clip_id, "captions")?;
    if let Some(bad) = captions.iter().filter(|x| x.variant != variant).min_by(|a, b| a.clip_id.cmp(&b.clip_id)) {
        return Err(DatasetError::WrongVariant { clip_id: bad.clip_id.clone(), expected: variant, got: bad.variant });
    }
    let all: BTreeSet<&str> = t.keys().chain(e.keys()).chain(c.keys()).copied().collect();
    let mut records = Vec::new();
    for id in &all {
        if let (Some(t), Some(e), Some(c)) = (t.get(id), e.get(id), c.get(id)) {
            records.push(CaptionRecord {
                clip_id: id.to_string(),
                events: t.events.clone(),
                valence: e.valence,
                arousal: e.arousal,
                emotion_text: e.text.clone(),
                variant,
                caption: c.caption.clone(),
                num_words: word_count(&c.caption),
            });
        }
    }
    let skipped = all.len() - records.len();
    if skipped > 0 {
        log::warn!("{skipped} clip(s) missing from at least one input were skipped");
    }
    Ok(Assembled { records, skipped })
}

pub fn write_records(path: &Path, records: &[CaptionRecord]) -> Result<(), DatasetError> {
    Ok(write_jsonl(path, records)?)
}

pub fn read_records(path: &Path) -> Result<Vec<CaptionRecord>, DatasetError> {
    Ok(read_jsonl(path)?)
}

/// Caption strings from an external file: a JSON array of objects, a JSON
/// object whose values are such objects, or JSONL. `field` names the caption
/// key inside each object.
pub fn read_caption_texts(path: &Path, field: &str) -> Result<Vec<String>, DatasetError> {
    let fmt_err = |message: String| DatasetError::Format { path: path.display().to_string(), message };
    let text = std::fs::read_to_string(path).map_err(|e| fmt_err(e.to_string()))?;
    let items: Vec<Value> = match serde_json::from_str::<Value>(&text) {
        Ok(Value::Array(a)) => a,
        Ok(Value::Object(o)) if !o.contains_key(field) => o.into_iter().map(|(_, v)| v).collect(),
        _ => read_jsonl::<Value>(path)?,
    };
    items
        .iter()
        .enumerate()
        .map(|(i, v)| {
            v.get(field)
                .and_then(Value::as_str)
                .map(str::to_string)
                .ok_or_else(|| fmt_err(format!("entry {} has no string field {field:?}", i + 1)))
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubsetStats {
    pub variant: Option<PromptVariant>,
    pub clip_count: usize,
    pub mean_words: f64,
    /// Population standard deviation.
    pub sd_words: f64,
    pub flag_rates: BTreeMap<String, f64>,
}

/// Statistics over raw caption strings; word counts and flags are recomputed.
pub fn caption_stats<S: AsRef<str>>(variant: Option<PromptVariant>, captions: &[S]) -> SubsetStats {
    let n = captions.len();
    let counts: Vec<f64> = captions.iter().map(|c| word_count(c.as_ref()) as f64).collect();
    let (mean, sd) = if n == 0 {
        (0.0, 0.0)
    } else {
        let mean = counts.iter().sum::<f64>() / n as f64;
        (mean, (counts.iter().map(|c| (c - mean).powi(2)).sum::<f64>() / n as f64).sqrt())
    };
    let mut hits = [0usize; 4];
    for c in captions {
        for (h, f) in hits.iter_mut().zip(validate_caption(c.as_ref()).as_array()) {
            *h += usize::from(f);
        }
    }
    let flag_rates = CaptionFlags::NAMES
        .iter()
        .zip(hits)
        .map(|(name, h)| (name.to_string(), if n == 0 { 0.0 } else { h as f64 / n as f64 }))
        .collect();
    SubsetStats { variant, clip_count: n, mean_words: mean, sd_words: sd, flag_rates }
}

/// Statistics for one subset. All records must share a variant.
pub fn subset_stats(records: &[CaptionRecord]) -> Result<SubsetStats, DatasetError> {
    let first = records.first().ok_or(DatasetError::Empty)?.variant;
    if let Some(r) = records.iter().find(|r| r.variant != first) {
        return Err(DatasetError::MixedVariants(first, r.variant));
    }
    let captions: Vec<&str> = records.iter().map(|r| r.caption.as_str()).collect();
    Ok(caption_stats(Some(first), &captions))
}

/// Aligned text table, one row per subset.
pub fn stats_table(stats: &[(String, SubsetStats)]) -> String {
    let name_w = stats.iter().map(|s| s.0.len()).chain([6]).max().unwrap();
    let mut out = format!("{:<name_w$}  {:>6}  {:>10}  {:>8}", "subset", "clips", "mean_words", "sd_words");
    for f in CaptionFlags::NAMES {
        out.push_str(&format!("  {f:>14}"));
    }
    out.push('\n');
    for (name, s) in stats {
        out.push_str(&format!("{name:<name_w$}  {:>6}  {:>10.2}  {:>8.2}", s.clip_count, s.mean_words, s.sd_words));
        for f in CaptionFlags::NAMES {
            out.push_str(&format!("  {:>14.3}", s.flag_rates[f]));
        }
        out.push('\n');
    }
    out
}
