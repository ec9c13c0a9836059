//! Prompt rendering, chat backends, caption validation and the cached batch driver.

mod backend;
mod batch;
mod cache;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use backend::{BackendError, ChatBackend, FaultPlan, HttpBackend, MockBackend};
pub use batch::{
    generate, generate_corpus, CaptionJob, CorpusRun, FailureRecord, GenerateError, LlmConfig, RequestStats,
    RetryPolicy, RunManifest,
};
pub use cache::{cache_key, CacheEntry, CaptionCache};

pub const WAVCAPS_INSTRUCTION: &str = "I will give you a number of lists containing sound events occurred sequentially in time. Process each individually. Write a one-sentence audio caption to describe these sounds. Make sure you are using grammatical subject-verb-object sentences. Directly describe the sounds and avoid using the word \"heard\". The caption should be less than 20 words.";
pub const SCENE_FOCUSED_INSTRUCTION: &str = "I will provide a list containing chronological sound events of an auditory scene. Write a one-sentence audio caption to describe the scene. Make sure to use an active voice. Describe the scene without simply listing the sounds. The caption should be less than 20 words.";
pub const EMOTION_ADDON_INSTRUCTION: &str = "I will also provide a mood. Please emphasize this mood in your caption.";
pub const EMOTION_REWRITE_INSTRUCTION: &str = "I will give you a sentence describing a sound scene, and a mood. Please rewrite the sentence, emphasizing the indicated mood.";

/// Captions at or above this many words are flagged.
pub const MAX_CAPTION_WORDS: usize = 20;

#[derive(Debug, Error, PartialEq)]
pub enum PromptError {
    #[error("{0} needs a mood")]
    MissingMood(PromptVariant),
    #[error("emotion_rewrite needs the prior scene caption")]
    MissingPriorCaption,
    #[error("event list is empty")]
    NoEvents,
    #[error("unknown prompt variant {0:?}")]
    UnknownVariant(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PromptVariant {
    Wavcaps,
    SceneFocused,
    EmotionAddon,
    EmotionRewrite,
}

impl PromptVariant {
    pub const ALL: [PromptVariant; 4] =
        [PromptVariant::Wavcaps, PromptVariant::SceneFocused, PromptVariant::EmotionAddon, PromptVariant::EmotionRewrite];

    pub fn name(self) -> &'static str {
        match self {
            PromptVariant::Wavcaps => "wavcaps",
            PromptVariant::SceneFocused => "scene_focused",
            PromptVariant::EmotionAddon => "emotion_addon",
            PromptVariant::EmotionRewrite => "emotion_rewrite",
        }
    }

    pub fn needs_mood(self) -> bool {
        matches!(self, PromptVariant::EmotionAddon | PromptVariant::EmotionRewrite)
    }
}

impl fmt::Display for PromptVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for PromptVariant {
    type Err = PromptError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        PromptVariant::ALL.into_iter().find(|v| v.name() == s).ok_or_else(|| PromptError::UnknownVariant(s.into()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    System,
    User,
    Assistant,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ChatMessage {
    pub role: Role,
    pub content: String,
}

impl ChatMessage {
    pub fn user(content: impl Into<String>) -> Self {
        ChatMessage { role: Role::User, content: content.into() }
    }

    pub fn assistant(content: impl Into<String>) -> Self {
        ChatMessage { role: Role::Assistant, content: content.into() }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChatExchange {
    pub variant: PromptVariant,
    pub messages: Vec<ChatMessage>,
}

/// Python-style string literal: single quotes unless the text contains a
/// single quote and no double quote.
fn py_str(s: &str) -> String {
    let q = if s.contains('\'') && !s.contains('"') { '"' } else { '\'' };
    let mut out = String::with_capacity(s.len() + 2);
    out.push(q);
    for c in s.chars() {
        match c {
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            '\t' => out.push_str("\\t"),
            '\r' => out.push_str("\\r"),
            c if c == q => {
                out.push('\\');
                out.push(c);
            }
            c => out.push(c),
        }
    }
    out.push(q);
    out
}

/// `['Thunder', 'Rain on surface']`
pub fn render_event_list(events: &[String]) -> String {
    let items: Vec<String> = events.iter().map(|e| py_str(e)).collect();
    format!("[{}]", items.join(", "))
}

fn scene_turn(events: &[String]) -> String {
    format!("{SCENE_FOCUSED_INSTRUCTION}\n{}", render_event_list(events))
}

/// Builds the message list for one clip. `mood` is required by the two
/// emotion variants and `prior_caption` by `emotion_rewrite`.
pub fn render_prompt(
    variant: PromptVariant,
    events: &[String],
    mood: Option<&str>,
    prior_caption: Option<&str>,
) -> Result<ChatExchange, PromptError> {
    if events.is_empty() {
        return Err(PromptError::NoEvents);
    }
    let mood = match (variant.needs_mood(), mood) {
        (true, None) => return Err(PromptError::MissingMood(variant)),
        (_, m) => m,
    };
    let messages = match variant {
        PromptVariant::Wavcaps => vec![ChatMessage::user(format!("{WAVCAPS_INSTRUCTION}\n{}", render_event_list(events)))],
        PromptVariant::SceneFocused => vec![ChatMessage::user(scene_turn(events))],
        PromptVariant::EmotionAddon => vec![ChatMessage::user(format!(
            "{SCENE_FOCUSED_INSTRUCTION} {EMOTION_ADDON_INSTRUCTION}\n{}\nMood: {}",
            render_event_list(events),
            mood.unwrap()
        ))],
        PromptVariant::EmotionRewrite => {
            let prior = prior_caption.ok_or(PromptError::MissingPriorCaption)?;
            vec![
                ChatMessage::user(scene_turn(events)),
                ChatMessage::assistant(prior),
                ChatMessage::user(format!("{EMOTION_REWRITE_INSTRUCTION}\n{prior}\nMood: {}", mood.unwrap())),
            ]
        }
    };
    Ok(ChatExchange { variant, messages })
}

/// Whitespace-token count shared by caption validation and corpus statistics.
pub fn word_count(text: &str) -> usize {
    text.split_whitespace().count()
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CaptionFlags {
    pub too_long: bool,
    pub contains_heard: bool,
    pub empty: bool,
    pub multi_sentence: bool,
}

impl CaptionFlags {
    pub const NAMES: [&'static str; 4] = ["too_long", "contains_heard", "empty", "multi_sentence"];

    pub fn any(&self) -> bool {
        self.too_long || self.contains_heard || self.empty || self.multi_sentence
    }

    pub fn as_array(&self) -> [bool; 4] {
        [self.too_long, self.contains_heard, self.empty, self.multi_sentence]
    }
}

fn is_terminal(c: char) -> bool {
    matches!(c, '.' | '!' | '?')
}

/// Runs of `.`, `!` or `?` that end a token; "3.5" and "..." count as zero and one.
fn terminal_marks(text: &str) -> usize {
    text.split_whitespace().map(|tok| {
        let chars: Vec<char> = tok.chars().collect();
        (0..chars.len())
            .filter(|&i| is_terminal(chars[i]) && chars.get(i + 1).is_none_or(|&n| !is_terminal(n) && !n.is_alphanumeric()))
            .count()
    }).sum()
}

pub fn validate_caption(caption: &str) -> CaptionFlags {
    let n = word_count(caption);
    CaptionFlags {
        too_long: n >= MAX_CAPTION_WORDS,
        contains_heard: caption
            .split_whitespace()
            .any(|t| t.trim_matches(|c: char| !c.is_alphanumeric()).eq_ignore_ascii_case("heard")),
        empty: n == 0,
        multi_sentence: terminal_marks(caption) > 1,
    }
}

/// First non-empty line of a completion, trimmed of whitespace and one layer
/// of matching surrounding quotes.
pub fn extract_caption(reply: &str) -> String {
    let line = reply.lines().map(str::trim).find(|l| !l.is_empty()).unwrap_or("");
    for (open, close) in [('"', '"'), ('\'', '\''), ('\u{201c}', '\u{201d}')] {
        if line.len() >= 2 && line.starts_with(open) && line.ends_with(close) {
            return line[open.len_utf8()..line.len() - close.len_utf8()].trim().to_string();
        }
    }
    line.to_string()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CaptionResult {
    pub clip_id: String,
    pub variant: PromptVariant,
    pub caption: String,
    pub word_count: usize,
    pub flags: CaptionFlags,
}

impl CaptionResult {
    pub fn new(clip_id: impl Into<String>, variant: PromptVariant, caption: impl Into<String>) -> Self {
        let caption = caption.into();
        CaptionResult { clip_id: clip_id.into(), variant, word_count: word_count(&caption), flags: validate_caption(&caption), caption }
    }
}
