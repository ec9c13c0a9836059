//! Discretizes (valence, arousal) into one of eight soundscape emotions with an
//! intensity qualifier.
//!
//! Emotions sit every 45 degrees on the unit circle with valence on the x axis
//! and arousal on the y axis: pleasant 0, exciting 45, eventful 90, chaotic 135,
//! unpleasant 180, boring 225, uneventful 270, quiet 315. A point takes the
//! emotion with the highest cosine similarity; its projection onto that axis
//! measures intensity, which is ranked against a corpus to pick the qualifier.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum CircumplexError {
    #[error("affect values must be finite, got ({0}, {1})")]
    NonFinite(f64, f64),
    #[error("percentile {0} outside [0, 1]")]
    PercentileOutOfRange(f64),
    #[error("magnitude distribution must contain at least one finite value")]
    EmptyDistribution,
    #[error("unknown emotion {0:?}")]
    UnknownEmotion(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Emotion {
    Pleasant,
    Exciting,
    Eventful,
    Chaotic,
    Unpleasant,
    Boring,
    Uneventful,
    Quiet,
}

impl Emotion {
    /// Counterclockwise from the positive valence axis.
    pub const ALL: [Emotion; 8] = [
        Emotion::Pleasant,
        Emotion::Exciting,
        Emotion::Eventful,
        Emotion::Chaotic,
        Emotion::Unpleasant,
        Emotion::Boring,
        Emotion::Uneventful,
        Emotion::Quiet,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Emotion::Pleasant => "pleasant",
            Emotion::Exciting => "exciting",
            Emotion::Eventful => "eventful",
            Emotion::Chaotic => "chaotic",
            Emotion::Unpleasant => "unpleasant",
            Emotion::Boring => "boring",
            Emotion::Uneventful => "uneventful",
            Emotion::Quiet => "quiet",
        }
    }

    pub fn angle_degrees(self) -> f64 {
        45.0 * Emotion::ALL.iter().position(|&e| e == self).unwrap() as f64
    }

    pub fn unit_vector(self) -> (f64, f64) {
        let t = self.angle_degrees().to_radians();
        (t.cos(), t.sin())
    }
}

impl fmt::Display for Emotion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Emotion {
    type Err = CircumplexError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Emotion::ALL
            .into_iter()
            .find(|e| e.name() == s)
            .ok_or_else(|| CircumplexError::UnknownEmotion(s.to_string()))
    }
}

/// A point in the valence/arousal square; out-of-range values are clamped.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AffectPoint {
    pub valence: f64,
    pub arousal: f64,
}

impl AffectPoint {
    pub fn new(valence: f64, arousal: f64) -> Result<Self, CircumplexError> {
        if !valence.is_finite() || !arousal.is_finite() {
            return Err(CircumplexError::NonFinite(valence, arousal));
        }
        Ok(Self { valence: valence.clamp(-1.0, 1.0), arousal: arousal.clamp(-1.0, 1.0) })
    }

    pub fn norm(&self) -> f64 {
        self.valence.hypot(self.arousal)
    }

    pub fn is_zero(&self) -> bool {
        self.valence == 0.0 && self.arousal == 0.0
    }
}

/// Emotion axis with the highest cosine similarity, or `None` at the origin.
/// Exact ties go to the axis with the smaller angle.
pub fn nearest_emotion(a: AffectPoint) -> Option<Emotion> {
    if a.is_zero() {
        return None;
    }
    let norm = a.norm();
    let mut best = Emotion::Pleasant;
    let mut best_cos = f64::NEG_INFINITY;
    for e in Emotion::ALL {
        let cos = projection_magnitude(a, e) / norm;
        if cos > best_cos {
            best_cos = cos;
            best = e;
        }
    }
    Some(best)
}

/// Signed length of the projection of `a` onto the emotion's unit vector.
pub fn projection_magnitude(a: AffectPoint, e: Emotion) -> f64 {
    let (x, y) = e.unit_vector();
    a.valence * x + a.arousal * y
}

/// Sorted sample of projection magnitudes used to rank intensities.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MagnitudeDistribution {
    magnitudes: Vec<f64>,
}

impl MagnitudeDistribution {
    pub fn new(mut magnitudes: Vec<f64>) -> Result<Self, CircumplexError> {
        magnitudes.retain(|m| m.is_finite());
        if magnitudes.is_empty() {
            return Err(CircumplexError::EmptyDistribution);
        }
        magnitudes.sort_by(f64::total_cmp);
        Ok(Self { magnitudes })
    }

    pub fn count(&self) -> usize {
        self.magnitudes.len()
    }

    pub fn magnitudes(&self) -> &[f64] {
        &self.magnitudes
    }
}

/// Empirical CDF: fraction of the sample that is `<= m`.
pub fn percentile_of(d: &MagnitudeDistribution, m: f64) -> f64 {
    d.magnitudes.partition_point(|&x| x <= m) as f64 / d.count() as f64
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Qualifier {
    Neutral,
    Slightly,
    Plain,
    Highly,
}

impl Qualifier {
    /// `p < 0.15` neutral, `[0.15, 0.5)` slightly, `[0.5, 0.85)` plain, `[0.85, 1]` highly.
    pub fn from_percentile(p: f64) -> Result<Qualifier, CircumplexError> {
        if !(0.0..=1.0).contains(&p) {
            return Err(CircumplexError::PercentileOutOfRange(p));
        }
        Ok(if p < 0.15 {
            Qualifier::Neutral
        } else if p < 0.50 {
            Qualifier::Slightly
        } else if p < 0.85 {
            Qualifier::Plain
        } else {
            Qualifier::Highly
        })
    }

    pub fn render(self, e: Emotion) -> String {
        match self {
            Qualifier::Neutral => "neutral".to_string(),
            Qualifier::Slightly => format!("slightly {e}"),
            Qualifier::Plain => e.to_string(),
            Qualifier::Highly => format!("highly {e}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QualifiedEmotion {
    /// `None` only for the zero affect vector.
    pub emotion: Option<Emotion>,
    pub qualifier: Qualifier,
    pub magnitude: f64,
    pub percentile: f64,
    pub text: String,
}

impl QualifiedEmotion {
    fn no_direction() -> Self {
        QualifiedEmotion { emotion: None, qualifier: Qualifier::Neutral, magnitude: 0.0, percentile: 0.0, text: "neutral".into() }
    }

    /// Emotion name without the intensity qualifier ("neutral" stays "neutral").
    pub fn unqualified_text(&self) -> String {
        match (self.qualifier, self.emotion) {
            (Qualifier::Neutral, _) | (_, None) => "neutral".to_string(),
            (_, Some(e)) => e.to_string(),
        }
    }
}

pub fn qualify(e: Emotion, magnitude: f64, p: f64) -> Result<QualifiedEmotion, CircumplexError> {
    let qualifier = Qualifier::from_percentile(p)?;
    Ok(QualifiedEmotion { emotion: Some(e), qualifier, magnitude, percentile: p, text: qualifier.render(e) })
}

/// Qualifies every point against a fixed distribution.
pub fn qualify_with(affects: &[AffectPoint], dist: &MagnitudeDistribution) -> Vec<QualifiedEmotion> {
    affects
        .iter()
        .map(|&a| match nearest_emotion(a) {
            None => QualifiedEmotion::no_direction(),
            Some(e) => {
                let m = projection_magnitude(a, e);
                qualify(e, m, percentile_of(dist, m)).expect("empirical CDF lies in [0, 1]")
            }
        })
        .collect()
}

/// Two passes: gather magnitudes of all directed points, then rank each point
/// within that sample. The origin is always "neutral" and is left out of the
/// sample. Returns `None` for the distribution when no point has a direction.
pub fn qualify_corpus(affects: &[AffectPoint]) -> (Vec<QualifiedEmotion>, Option<MagnitudeDistribution>) {
    let magnitudes: Vec<f64> = affects
        .iter()
        .filter_map(|&a| nearest_emotion(a).map(|e| projection_magnitude(a, e)))
        .collect();
    match MagnitudeDistribution::new(magnitudes) {
        Ok(dist) => (qualify_with(affects, &dist), Some(dist)),
        Err(_) => (affects.iter().map(|_| QualifiedEmotion::no_direction()).collect(), None),
    }
}

/// Per-clip record written by the labeling step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmotionRecord {
    pub clip_id: String,
    pub valence: f64,
    pub arousal: f64,
    pub emotion: Option<Emotion>,
    pub qualifier: Qualifier,
    pub magnitude: f64,
    pub percentile: f64,
    pub text: String,
}

impl EmotionRecord {
    pub fn new(clip_id: impl Into<String>, a: AffectPoint, q: &QualifiedEmotion) -> Self {
        EmotionRecord {
            clip_id: clip_id.into(),
            valence: a.valence,
            arousal: a.arousal,
            emotion: q.emotion,
            qualifier: q.qualifier,
            magnitude: q.magnitude,
            percentile: q.percentile,
            text: q.text.clone(),
        }
    }

    pub fn affect(&self) -> AffectPoint {
        AffectPoint { valence: self.valence, arousal: self.arousal }
    }

    pub fn qualified(&self) -> QualifiedEmotion {
        QualifiedEmotion {
            emotion: self.emotion,
            qualifier: self.qualifier,
            magnitude: self.magnitude,
            percentile: self.percentile,
            text: self.text.clone(),
        }
    }
}
