use serde::{Deserialize, Serialize};

use super::delta::delta;
use super::frames::frame_signal;
use super::mfcc::{mel_filterbank, mfcc_from_power};
use super::spectral::{spectral_descriptors, SpectrumAnalyzer};
use super::{DspConfig, DspError, Waveform};

pub const N_FRAME_FEATURES: usize = 36;
pub const FEATURE_DIM: usize = 2 * N_FRAME_FEATURES;

/// Column order of [`FrameFeatures`]; the feature vector holds the means of
/// these in this order followed by their standard deviations.
pub const FRAME_FEATURE_NAMES: [&str; N_FRAME_FEATURES] = [
    "mfcc_0",
    "mfcc_1",
    "mfcc_2",
    "mfcc_3",
    "mfcc_4",
    "mfcc_5",
    "mfcc_6",
    "mfcc_7",
    "mfcc_8",
    "mfcc_9",
    "mfcc_10",
    "mfcc_11",
    "mfcc_12",
    "delta_mfcc_0",
    "delta_mfcc_1",
    "delta_mfcc_2",
    "delta_mfcc_3",
    "delta_mfcc_4",
    "delta_mfcc_5",
    "delta_mfcc_6",
    "delta_mfcc_7",
    "delta_mfcc_8",
    "delta_mfcc_9",
    "delta_mfcc_10",
    "delta_mfcc_11",
    "delta_mfcc_12",
    "zcr",
    "spectral_centroid",
    "spectral_bandwidth",
    "spectral_contrast",
    "spectral_flatness",
    "spectral_rolloff",
    "loudness",
    "delta_loudness",
    "rms",
    "delta_rms",
];

pub(crate) mod col {
    pub const MFCC: usize = 0;
    pub const DELTA_MFCC: usize = 13;
    pub const ZCR: usize = 26;
    pub const CENTROID: usize = 27;
    pub const BANDWIDTH: usize = 28;
    pub const CONTRAST: usize = 29;
    pub const FLATNESS: usize = 30;
    pub const ROLLOFF: usize = 31;
    pub const LOUDNESS: usize = 32;
    pub const DELTA_LOUDNESS: usize = 33;
    pub const RMS: usize = 34;
    pub const DELTA_RMS: usize = 35;
}

/// `mean_<name>` for all 36 features, then `std_<name>`.
pub fn feature_column_names() -> Vec<String> {
    let means = FRAME_FEATURE_NAMES.iter().map(|n| format!("mean_{n}"));
    let stds = FRAME_FEATURE_NAMES.iter().map(|n| format!("std_{n}"));
    means.chain(stds).collect()
}

/// Per-frame descriptor matrix, one row per frame.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameFeatures {
    pub rows: Vec<[f64; N_FRAME_FEATURES]>,
}

impl FrameFeatures {
    pub fn column(&self, c: usize) -> Vec<f64> {
        self.rows.iter().map(|r| r[c]).collect()
    }
}

/// Clip-level summary: means then population standard deviations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureVector {
    pub clip_id: String,
    #[serde(rename = "features")]
    pub values: Vec<f64>,
}

impl FeatureVector {
    pub fn means(&self) -> &[f64] {
        &self.values[..N_FRAME_FEATURES]
    }

    pub fn stds(&self) -> &[f64] {
        &self.values[N_FRAME_FEATURES..]
    }

    pub fn get(&self, column: &str) -> Option<f64> {
        let (stat, name) = column.split_once('_')?;
        let idx = FRAME_FEATURE_NAMES.iter().position(|n| *n == name)?;
        match stat {
            "mean" => Some(self.values[idx]),
            "std" => Some(self.values[N_FRAME_FEATURES + idx]),
            _ => None,
        }
    }
}

/// Computes the per-frame descriptor matrix of a waveform already at the
/// analysis sample rate.
pub fn frame_features(w: &Waveform, cfg: &DspConfig) -> Result<FrameFeatures, DspError> {
    cfg.validate()?;
    if w.sample_rate() != cfg.sample_rate {
        return Err(DspError::Config(format!(
            "waveform at {} Hz, analysis expects {} Hz",
            w.sample_rate(),
            cfg.sample_rate
        )));
    }
    let frames = frame_signal(w.samples(), cfg.frame_len, cfg.hop);
    let analyzer = SpectrumAnalyzer::new(cfg.frame_len, cfg.sample_rate);
    let mcfg = cfg.mfcc_config();
    let fb = mel_filterbank(cfg.frame_len, cfg.sample_rate, mcfg.n_mels, mcfg.fmin, mcfg.fmax);

    let mut rows = Vec::with_capacity(frames.len());
    for frame in &frames {
        let spec = analyzer.power(frame);
        let coeffs = mfcc_from_power(&spec.power, &fb, &mcfg);
        let d = spectral_descriptors(frame, &spec, cfg);
        let mut row = [0.0; N_FRAME_FEATURES];
        row[col::MFCC..col::MFCC + 13].copy_from_slice(&coeffs);
        row[col::ZCR] = d.zcr;
        row[col::CENTROID] = d.centroid;
        row[col::BANDWIDTH] = d.bandwidth;
        row[col::CONTRAST] = d.contrast;
        row[col::FLATNESS] = d.flatness;
        row[col::ROLLOFF] = d.rolloff;
        row[col::LOUDNESS] = d.loudness;
        row[col::RMS] = d.rms;
        rows.push(row);
    }

    let mut ff = FrameFeatures { rows };
    for k in 0..13 {
        fill_delta(&mut ff, col::MFCC + k, col::DELTA_MFCC + k, cfg.delta_width);
    }
    fill_delta(&mut ff, col::LOUDNESS, col::DELTA_LOUDNESS, cfg.delta_width);
    fill_delta(&mut ff, col::RMS, col::DELTA_RMS, cfg.delta_width);
    Ok(ff)
}

fn fill_delta(ff: &mut FrameFeatures, src: usize, dst: usize, width: usize) {
    let d = delta(&ff.column(src), width);
    for (row, v) in ff.rows.iter_mut().zip(d) {
        row[dst] = v;
    }
}

/// Resamples to the analysis rate if needed and summarizes the frame
/// descriptors into a 72-dimensional vector.
pub fn extract_features(clip_id: &str, w: &Waveform, cfg: &DspConfig) -> Result<FeatureVector, DspError> {
    cfg.validate()?;
    let w = w.resample(cfg.sample_rate)?;
    let ff = frame_features(&w, cfg)?;
    let n = ff.rows.len() as f64;
    let mut values = vec![0.0; FEATURE_DIM];
    for c in 0..N_FRAME_FEATURES {
        let mean = ff.rows.iter().map(|r| r[c]).sum::<f64>() / n;
        let var = ff.rows.iter().map(|r| (r[c] - mean).powi(2)).sum::<f64>() / n;
        values[c] = mean;
        values[N_FRAME_FEATURES + c] = var.sqrt();
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(DspError::NonFinite);
    }
    Ok(FeatureVector { clip_id: clip_id.to_string(), values })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn names_are_unique_and_complete() {
        let cols = feature_column_names();
        assert_eq!(cols.len(), 72);
        let set: std::collections::HashSet<_> = cols.iter().collect();
        assert_eq!(set.len(), 72);
        assert_eq!(cols[26], "mean_zcr");
        assert_eq!(cols[36 + 35], "std_delta_rms");
    }

    #[test]
    fn dc_signal_has_zero_spread() {
        let w = Waveform::new(vec![0.25; 22050], 22050).unwrap();
        let fv = extract_features("dc", &w, &DspConfig::default()).unwrap();
        assert_eq!(fv.values.len(), 72);
        assert!(fv.stds().iter().all(|&s| s.abs() < 1e-9), "{:?}", fv.stds());
    }

    #[test]
    fn silence_is_finite() {
        let w = Waveform::new(vec![0.0; 5000], 22050).unwrap();
        let fv = extract_features("quiet", &w, &DspConfig::default()).unwrap();
        assert!(fv.values.iter().all(|v| v.is_finite()));
        assert_eq!(fv.get("mean_loudness"), Some(-80.0));
        assert_eq!(fv.get("mean_spectral_flatness"), Some(1.0));
    }

    #[test]
    fn sine_zcr_matches_crossing_rate() {
        let sr = 22050.0;
        let f = 440.0;
        let s: Vec<f64> = (0..(6.0 * sr) as usize)
            .map(|i| 0.5 * (2.0 * PI * f * i as f64 / sr + 0.3).sin())
            .collect();
        let fv = extract_features("sine", &Waveform::new(s, 22050).unwrap(), &DspConfig::default()).unwrap();
        let expect = 2.0 * f / sr;
        let got = fv.get("mean_zcr").unwrap();
        assert!((got - expect).abs() / expect < 0.05, "zcr {got} vs {expect}");
    }

    #[test]
    fn resamples_foreign_rate() {
        let s: Vec<f64> = (0..44100).map(|i| (i as f64 * 0.01).sin() * 0.3).collect();
        let fv = extract_features("x", &Waveform::new(s, 44100).unwrap(), &DspConfig::default()).unwrap();
        assert_eq!(fv.values.len(), 72);
    }

    #[test]
    fn frame_features_requires_analysis_rate() {
        let w = Waveform::new(vec![0.0; 100], 8000).unwrap();
        assert!(frame_features(&w, &DspConfig::default()).is_err());
    }
}
