use std::collections::HashMap;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use thiserror::Error;

use super::{ChatMessage, Role};

#[derive(Debug, Clone, PartialEq, Eq, Error, Serialize, Deserialize)]
pub enum BackendError {
    /// Worth retrying: timeouts, connection errors, 429 and 5xx.
    #[error("transient failure (status {status:?}): {message}")]
    Transient { status: Option<u16>, message: String },
    #[error("permanent failure (status {status:?}): {message}")]
    Permanent { status: Option<u16>, message: String },
}

impl BackendError {
    pub fn is_transient(&self) -> bool {
        matches!(self, BackendError::Transient { .. })
    }

    pub fn status(&self) -> Option<u16> {
        match self {
            BackendError::Transient { status, .. } | BackendError::Permanent { status, .. } => *status,
        }
    }

    fn from_status(status: u16, body: &str) -> Self {
        let message: String = body.chars().take(200).collect();
        if status == 429 || status >= 500 {
            BackendError::Transient { status: Some(status), message }
        } else {
            BackendError::Permanent { status: Some(status), message }
        }
    }
}

/// Anything that turns a message list into one completion string.
pub trait ChatBackend: Send + Sync {
    fn complete(&self, messages: &[ChatMessage], model: &str, temperature: f64) -> Result<String, BackendError>;
}

/// Chat-completions over HTTP: posts `{model, temperature, messages}` and
/// reads `choices[0].message.content`.
pub struct HttpBackend {
    agent: ureq::Agent,
    endpoint: String,
    api_key: Option<String>,
}

impl HttpBackend {
    pub fn new(endpoint: impl Into<String>, api_key: Option<String>, timeout: Duration) -> Self {
        let agent: ureq::Agent =
            ureq::Agent::config_builder().http_status_as_error(false).timeout_global(Some(timeout)).build().into();
        HttpBackend { agent, endpoint: endpoint.into(), api_key }
    }
}

impl ChatBackend for HttpBackend {
    fn complete(&self, messages: &[ChatMessage], model: &str, temperature: f64) -> Result<String, BackendError> {
        let body = json!({ "model": model, "temperature": temperature, "messages": messages }).to_string();
        let mut req = self.agent.post(&self.endpoint).header("Content-Type", "application/json");
        if let Some(key) = &self.api_key {
            req = req.header("Authorization", format!("Bearer {key}"));
        }
        let mut resp =
            req.send(body).map_err(|e| BackendError::Transient { status: None, message: e.to_string() })?;
        let status = resp.status().as_u16();
        let text = resp
            .body_mut()
            .read_to_string()
            .map_err(|e| BackendError::Transient { status: Some(status), message: e.to_string() })?;
        if !(200..300).contains(&status) {
            return Err(BackendError::from_status(status, &text));
        }
        let v: Value = serde_json::from_str(&text)
            .map_err(|e| BackendError::Permanent { status: Some(status), message: format!("bad response json: {e}") })?;
        v.pointer("/choices/0/message/content")
            .and_then(Value::as_str)
            .map(str::to_string)
            .ok_or_else(|| BackendError::Permanent { status: Some(status), message: "response has no choices[0].message.content".into() })
    }
}

/// Scripted failures for requests whose last user turn contains `needle`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FaultPlan {
    pub needle: String,
    /// Transient failures served before the request succeeds.
    pub transient_failures: u32,
    /// Fail permanently after the transient ones.
    pub permanent: bool,
}

/// Deterministic offline backend.
///
/// Replies follow a fixed template: an event list `['A', 'B']` becomes
/// "Sounds of A and B.", prefixed by the capitalized mood when one is given
/// ("Unpleasant sounds of A and B."). A rewrite turn returns the sentence with
/// ", in a <mood> mood." appended.
#[derive(Debug, Default)]
pub struct MockBackend {
    faults: Vec<FaultPlan>,
    seen: Mutex<HashMap<usize, u32>>,
    calls: AtomicUsize,
}

impl MockBackend {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_faults(faults: Vec<FaultPlan>) -> Self {
        MockBackend { faults, ..Self::default() }
    }

    /// Number of `complete` calls, including failed ones.
    pub fn calls(&self) -> usize {
        self.calls.load(Ordering::SeqCst)
    }
}

fn parse_py_list(line: &str) -> Option<Vec<String>> {
    let inner = line.strip_prefix('[')?.strip_suffix(']')?;
    let mut out = Vec::new();
    let mut chars = inner.chars().peekable();
    loop {
        while chars.peek().is_some_and(|c| *c == ',' || c.is_whitespace()) {
            chars.next();
        }
        let Some(q) = chars.next() else { return Some(out) };
        if q != '\'' && q != '"' {
            return None;
        }
        let mut s = String::new();
        loop {
            match chars.next()? {
                '\\' => match chars.next()? {
                    'n' => s.push('\n'),
                    't' => s.push('\t'),
                    'r' => s.push('\r'),
                    c => s.push(c),
                },
                c if c == q => break,
                c => s.push(c),
            }
        }
        out.push(s);
    }
}

fn join_events(events: &[String]) -> String {
    match events {
        [] => String::new(),
        [one] => one.clone(),
        [init @ .., last] => format!("{} and {last}", init.join(", ")),
    }
}

fn capitalize(s: &str) -> String {
    let mut c = s.chars();
    c.next().map(|f| f.to_uppercase().chain(c).collect()).unwrap_or_default()
}

pub(crate) fn mock_reply(messages: &[ChatMessage]) -> String {
    let Some(last) = messages.iter().rev().find(|m| m.role == Role::User) else { return String::new() };
    let lines: Vec<&str> = last.content.lines().collect();
    let mood = lines.iter().find_map(|l| l.strip_prefix("Mood: "));
    if let Some(events) = lines.iter().find_map(|l| parse_py_list(l.trim())) {
        return match mood {
            Some(m) => format!("{} sounds of {}.", capitalize(m), join_events(&events)),
            None => format!("Sounds of {}.", join_events(&events)),
        };
    }
    let sentence = lines.get(1).map(|s| s.trim().trim_end_matches('.')).unwrap_or("");
    format!("{sentence}, in a {} mood.", mood.unwrap_or("neutral"))
}

impl ChatBackend for MockBackend {
    fn complete(&self, messages: &[ChatMessage], _model: &str, _temperature: f64) -> Result<String, BackendError> {
        self.calls.fetch_add(1, Ordering::SeqCst);
        let last = messages.iter().rev().find(|m| m.role == Role::User).map_or("", |m| m.content.as_str());
        if let Some((i, plan)) = self.faults.iter().enumerate().find(|(_, p)| last.contains(&p.needle)) {
            let mut seen = self.seen.lock().unwrap();
            let n = seen.entry(i).or_insert(0);
            *n += 1;
            if *n <= plan.transient_failures {
                return Err(BackendError::Transient { status: Some(503), message: format!("scripted failure {n}") });
            }
            if plan.permanent {
                return Err(BackendError::Permanent { status: Some(400), message: "scripted permanent failure".into() });
            }
        }
        Ok(mock_reply(messages))
    }
}
