//! Audio decoding and clip-level acoustic summary statistics.
//!
//! A clip is reduced to 36 per-frame descriptors (13 MFCCs, their deltas,
//! zero crossing rate, six spectral shape measures, loudness, RMS and the
//! deltas of the last two), which are then summarized by mean and standard
//! deviation into a 72-dimensional [`FeatureVector`].

mod delta;
mod features;
mod frames;
mod io;
mod mfcc;
mod spectral;
mod wav;

pub use delta::delta;
pub use features::{
    extract_features, feature_column_names, frame_features, FeatureVector, FrameFeatures, FEATURE_DIM,
    FRAME_FEATURE_NAMES, N_FRAME_FEATURES,
};
pub use frames::{frame_count, frame_signal, hann_window};
pub use io::{read_features_jsonl, write_features_csv, write_features_jsonl};
pub use mfcc::{hz_to_mel, mel_filterbank, mel_to_hz, mfcc, MfccConfig};
pub use spectral::{spectral_descriptors, PowerSpectrum, SpectralDescriptors};
pub use wav::{decode_wav, encode_wav_i16, load_wav};

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum DspError {
    #[error("failed to read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed WAV: {0}")]
    Format(String),
    #[error("unsupported WAV encoding: {0}")]
    Unsupported(String),
    #[error("audio contains no samples")]
    Empty,
    #[error("audio contains non-finite samples")]
    NonFinite,
    #[error("invalid analysis config: {0}")]
    Config(String),
    #[error(transparent)]
    Jsonl(#[from] crate::jsonl::JsonlError),
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
}

/// Mono audio with its sample rate.
#[derive(Debug, Clone, PartialEq)]
pub struct Waveform {
    samples: Vec<f64>,
    sample_rate: u32,
}

impl Waveform {
    pub fn new(samples: Vec<f64>, sample_rate: u32) -> Result<Self, DspError> {
        if samples.is_empty() {
            return Err(DspError::Empty);
        }
        if sample_rate == 0 {
            return Err(DspError::Config("sample rate must be positive".into()));
        }
        if samples.iter().any(|s| !s.is_finite()) {
            return Err(DspError::NonFinite);
        }
        Ok(Self { samples, sample_rate })
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn sample_rate(&self) -> u32 {
        self.sample_rate
    }

    pub fn duration_secs(&self) -> f64 {
        self.samples.len() as f64 / self.sample_rate as f64
    }

    /// Linear-interpolation resampling. Returns a clone when rates already match.
    pub fn resample(&self, target_rate: u32) -> Result<Waveform, DspError> {
        if target_rate == 0 {
            return Err(DspError::Config("target sample rate must be positive".into()));
        }
        if target_rate == self.sample_rate {
            return Ok(self.clone());
        }
        let ratio = self.sample_rate as f64 / target_rate as f64;
        let last = (self.samples.len() - 1) as f64;
        let n_out = (last / ratio).floor() as usize + 1;
        let out = (0..n_out)
            .map(|i| {
                let t = i as f64 * ratio;
                let i0 = t.floor() as usize;
                let frac = t - i0 as f64;
                match self.samples.get(i0 + 1) {
                    Some(&next) => self.samples[i0] * (1.0 - frac) + next * frac,
                    None => self.samples[i0],
                }
            })
            .collect();
        Waveform::new(out, target_rate)
    }
}

/// Analysis settings. Defaults: 22050 Hz, 2048-sample frames, hop 512,
/// 64 mel bands over [0, Nyquist], 13 coefficients, delta width 9.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DspConfig {
    pub sample_rate: u32,
    pub frame_len: usize,
    pub hop: usize,
    pub n_mels: usize,
    pub n_mfcc: usize,
    pub fmin: f64,
    /// `None` means Nyquist.
    pub fmax: Option<f64>,
    pub delta_width: usize,
    /// Floor applied to mel band power before the log.
    pub log_floor: f64,
    /// Floor in dB for frame loudness; silence maps exactly to this value.
    pub loudness_floor_db: f64,
    pub rolloff_fraction: f64,
    pub contrast_bands: usize,
    pub contrast_fmin: f64,
    pub contrast_quantile: f64,
}

impl Default for DspConfig {
    fn default() -> Self {
        Self {
            sample_rate: 22050,
            frame_len: 2048,
            hop: 512,
            n_mels: 64,
            n_mfcc: 13,
            fmin: 0.0,
            fmax: None,
            delta_width: 9,
            log_floor: 1e-10,
            loudness_floor_db: -80.0,
            rolloff_fraction: 0.85,
            contrast_bands: 6,
            contrast_fmin: 200.0,
            contrast_quantile: 0.02,
        }
    }
}

impl DspConfig {
    pub fn nyquist(&self) -> f64 {
        self.sample_rate as f64 / 2.0
    }

    pub fn validate(&self) -> Result<(), DspError> {
        let bad = |m: &str| Err(DspError::Config(m.to_string()));
        if self.sample_rate == 0 {
            return bad("sample_rate must be positive");
        }
        if self.frame_len < 2 {
            return bad("frame_len must be at least 2");
        }
        if self.hop == 0 {
            return bad("hop must be at least 1");
        }
        if self.n_mfcc != 13 {
            return bad("n_mfcc must be 13 to keep the 72-dimensional layout");
        }
        if self.n_mels < self.n_mfcc {
            return bad("n_mels must be at least n_mfcc");
        }
        let fmax = self.fmax.unwrap_or(self.nyquist());
        if !(0.0..fmax).contains(&self.fmin) || fmax > self.nyquist() {
            return bad("require 0 <= fmin < fmax <= Nyquist");
        }
        if self.delta_width < 3 || self.delta_width % 2 == 0 {
            return bad("delta_width must be odd and >= 3");
        }
        if !(self.log_floor > 0.0) {
            return bad("log_floor must be positive");
        }
        if !(self.rolloff_fraction > 0.0 && self.rolloff_fraction <= 1.0) {
            return bad("rolloff_fraction must be in (0, 1]");
        }
        if !(self.contrast_quantile > 0.0 && self.contrast_quantile <= 0.5) {
            return bad("contrast_quantile must be in (0, 0.5]");
        }
        if self.contrast_bands == 0 || !(self.contrast_fmin > 0.0) {
            return bad("contrast needs at least one band and a positive fmin");
        }
        Ok(())
    }

    pub fn mfcc_config(&self) -> MfccConfig {
        MfccConfig {
            n_mels: self.n_mels,
            n_mfcc: self.n_mfcc,
            fmin: self.fmin,
            fmax: self.fmax.unwrap_or(self.nyquist()),
            log_floor: self.log_floor,
        }
    }
}
