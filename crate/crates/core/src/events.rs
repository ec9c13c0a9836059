//! Strong-label annotations to per-clip event timelines.
//!
//! A timeline keeps the first chronological occurrence of each display name.
//! Segments are ordered by `(onset, offset, name)`, which makes the result
//! independent of input row order.

use std::collections::{BTreeMap, HashMap};
use std::fs::File;
use std::io::Read;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::jsonl::{read_jsonl, write_jsonl, JsonlError};

#[derive(Debug, Error)]
pub enum EventsError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("line {line}: {message}")]
    Row { line: u64, message: String },
    #[error("strong-label header must contain {0}")]
    Header(String),
    #[error("ontology: {0}")]
    Ontology(String),
    #[error("clip {clip_id}: unknown label {mid}")]
    UnknownLabel { clip_id: String, mid: String },
    #[error("timeline for {expected} received a segment of {got}")]
    MixedClips { expected: String, got: String },
    #[error(transparent)]
    Jsonl(#[from] JsonlError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EventSegment {
    pub clip_id: String,
    pub onset: f64,
    pub offset: f64,
    pub label_mid: String,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ParseMode {
    #[default]
    Strict,
    /// Malformed rows are skipped and counted.
    Lenient,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StrongLabels {
    pub segments: Vec<EventSegment>,
    pub skipped: usize,
}

const COLUMNS: [&str; 4] = ["segment_id", "start_time_seconds", "end_time_seconds", "label"];

/// Parses a tab-separated strong-label table. Columns are located by header
/// name; extra columns are ignored.
pub fn parse_strong_labels<R: Read>(input: R, mode: ParseMode) -> Result<StrongLabels, EventsError> {
    let mut rdr = csv::ReaderBuilder::new().delimiter(b'\t').flexible(true).quoting(false).from_reader(input);
    let header = rdr.headers().map_err(|e| EventsError::Row { line: 1, message: e.to_string() })?.clone();
    let mut idx = [0usize; 4];
    for (slot, name) in idx.iter_mut().zip(COLUMNS) {
        *slot = header.iter().position(|h| h.trim() == name).ok_or_else(|| EventsError::Header(name.into()))?;
    }

    let mut out = StrongLabels { segments: Vec::new(), skipped: 0 };
    for rec in rdr.records() {
        let parsed = rec.map_err(|e| (e.position().map_or(0, |p| p.line()), e.to_string())).and_then(|r| {
            let line = r.position().map_or(0, |p| p.line());
            parse_row(&r, &idx).map_err(|m| (line, m))
        });
        match parsed {
            Ok(Some(seg)) => out.segments.push(seg),
            Ok(None) => {}
            Err((line, message)) => match mode {
                ParseMode::Strict => return Err(EventsError::Row { line, message }),
                ParseMode::Lenient => {
                    log::warn!("skipping strong-label line {line}: {message}");
                    out.skipped += 1;
                }
            },
        }
    }
    Ok(out)
}

fn parse_row(r: &csv::StringRecord, idx: &[usize; 4]) -> Result<Option<EventSegment>, String> {
    if r.iter().all(|f| f.trim().is_empty()) {
        return Ok(None);
    }
    let field = |i: usize| r.get(idx[i]).map(str::trim).ok_or_else(|| format!("missing column {}", COLUMNS[i]));
    let seconds = |i: usize| -> Result<f64, String> {
        let s = field(i)?;
        let v: f64 = s.parse().map_err(|_| format!("{} is not a number: {s:?}", COLUMNS[i]))?;
        if v.is_finite() {
            Ok(v)
        } else {
            Err(format!("{} is not finite", COLUMNS[i]))
        }
    };
    let clip_id = field(0)?;
    let label = field(3)?;
    if clip_id.is_empty() || label.is_empty() {
        return Err("empty segment_id or label".into());
    }
    let (onset, offset) = (seconds(1)?, seconds(2)?);
    if onset < 0.0 {
        return Err(format!("negative onset {onset}"));
    }
    if offset <= onset {
        return Err(format!("offset {offset} not after onset {onset}"));
    }
    Ok(Some(EventSegment { clip_id: clip_id.into(), onset, offset, label_mid: label.into() }))
}

pub fn read_strong_labels(path: &Path, mode: ParseMode) -> Result<StrongLabels, EventsError> {
    let f = File::open(path).map_err(|source| EventsError::Io { path: path.into(), source })?;
    parse_strong_labels(f, mode)
}

/// Machine id to display name.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Ontology {
    names: HashMap<String, String>,
}

#[derive(Deserialize)]
struct OntologyEntry {
    id: String,
    name: String,
}

impl Ontology {
    pub fn from_pairs<I, S>(pairs: I) -> Result<Ontology, EventsError>
    where
        I: IntoIterator<Item = (S, S)>,
        S: Into<String>,
    {
        let mut names = HashMap::new();
        for (id, name) in pairs {
            let (id, name) = (id.into(), name.into());
            if name.trim().is_empty() {
                return Err(EventsError::Ontology(format!("empty name for {id}")));
            }
            if names.contains_key(&id) {
                return Err(EventsError::Ontology(format!("duplicate id {id}")));
            }
            names.insert(id, name);
        }
        Ok(Ontology { names })
    }

    pub fn name(&self, mid: &str) -> Option<&str> {
        self.names.get(mid).map(String::as_str)
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }
}

/// Parses an ontology JSON array of objects with at least `id` and `name`.
pub fn parse_ontology<R: Read>(input: R) -> Result<Ontology, EventsError> {
    let entries: Vec<OntologyEntry> = serde_json::from_reader(input).map_err(|e| EventsError::Ontology(e.to_string()))?;
    Ontology::from_pairs(entries.into_iter().map(|e| (e.id, e.name)))
}

pub fn read_ontology(path: &Path) -> Result<Ontology, EventsError> {
    let f = File::open(path).map_err(|source| EventsError::Io { path: path.into(), source })?;
    parse_ontology(std::io::BufReader::new(f))
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum UnknownLabelPolicy {
    #[default]
    Error,
    KeepMid,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EventTimeline {
    pub clip_id: String,
    pub events: Vec<String>,
    pub onsets: Vec<f64>,
}

/// Orders one clip's segments and keeps the first occurrence of each display name.
pub fn build_timeline(
    clip_id: &str,
    segments: &[EventSegment],
    ont: &Ontology,
    policy: UnknownLabelPolicy,
) -> Result<EventTimeline, EventsError> {
    let mut named: Vec<(f64, f64, &str)> = Vec::with_capacity(segments.len());
    for s in segments {
        if s.clip_id != clip_id {
            return Err(EventsError::MixedClips { expected: clip_id.into(), got: s.clip_id.clone() });
        }
        let name = match (ont.name(&s.label_mid), policy) {
            (Some(n), _) => n,
            (None, UnknownLabelPolicy::KeepMid) => s.label_mid.as_str(),
            (None, UnknownLabelPolicy::Error) => {
                return Err(EventsError::UnknownLabel { clip_id: clip_id.into(), mid: s.label_mid.clone() })
            }
        };
        named.push((s.onset, s.offset, name));
    }
    named.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)).then(a.2.cmp(b.2)));

    let mut tl = EventTimeline { clip_id: clip_id.into(), events: Vec::new(), onsets: Vec::new() };
    for (onset, _, name) in named {
        if !tl.events.iter().any(|e| e == name) {
            tl.events.push(name.to_string());
            tl.onsets.push(onset);
        }
    }
    Ok(tl)
}

/// Groups segments by clip and builds every timeline, keyed by sorted clip id.
pub fn build_corpus_timelines(
    segments: &[EventSegment],
    ont: &Ontology,
    policy: UnknownLabelPolicy,
) -> Result<BTreeMap<String, EventTimeline>, EventsError> {
    let mut groups: BTreeMap<&str, Vec<EventSegment>> = BTreeMap::new();
    for s in segments {
        groups.entry(s.clip_id.as_str()).or_default().push(s.clone());
    }
    groups
        .into_iter()
        .map(|(id, segs)| build_timeline(id, &segs, ont, policy).map(|t| (id.to_string(), t)))
        .collect()
}

pub fn write_timelines_jsonl(path: &Path, timelines: &[EventTimeline]) -> Result<(), EventsError> {
    Ok(write_jsonl(path, timelines)?)
}

pub fn read_timelines_jsonl(path: &Path) -> Result<Vec<EventTimeline>, EventsError> {
    Ok(read_jsonl(path)?)
}
