use std::sync::Arc;

use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};

use super::frames::hann_window;
use super::DspConfig;

/// One-sided power spectrum `|X_k|^2`, `k = 0..=n_fft/2`.
#[derive(Debug, Clone, PartialEq)]
pub struct PowerSpectrum {
    pub power: Vec<f64>,
    /// Frequency spacing between bins.
    pub bin_hz: f64,
}

impl PowerSpectrum {
    pub fn frequency(&self, bin: usize) -> f64 {
        bin as f64 * self.bin_hz
    }
}

/// Hann-windowed FFT of fixed-length frames.
pub(crate) struct SpectrumAnalyzer {
    fft: Arc<dyn Fft<f64>>,
    window: Vec<f64>,
    bin_hz: f64,
}

impl SpectrumAnalyzer {
    pub fn new(frame_len: usize, sample_rate: u32) -> Self {
        let fft = FftPlanner::new().plan_fft_forward(frame_len);
        Self {
            fft,
            window: hann_window(frame_len),
            bin_hz: sample_rate as f64 / frame_len as f64,
        }
    }

    pub fn power(&self, frame: &[f64]) -> PowerSpectrum {
        let mut buf: Vec<Complex<f64>> = frame
            .iter()
            .zip(&self.window)
            .map(|(x, w)| Complex::new(x * w, 0.0))
            .collect();
        self.fft.process(&mut buf);
        let n_bins = frame.len() / 2 + 1;
        PowerSpectrum {
            power: buf[..n_bins].iter().map(|c| c.norm_sqr()).collect(),
            bin_hz: self.bin_hz,
        }
    }
}

/// Scalar descriptors of one frame. `zcr`, `rms` and `loudness` come from
/// the time-domain frame, the rest from its power spectrum.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectralDescriptors {
    pub zcr: f64,
    pub centroid: f64,
    pub bandwidth: f64,
    pub contrast: f64,
    pub flatness: f64,
    pub rolloff: f64,
    pub loudness: f64,
    pub rms: f64,
}

pub fn spectral_descriptors(frame: &[f64], spectrum: &PowerSpectrum, cfg: &DspConfig) -> SpectralDescriptors {
    let n = frame.len();
    let crossings = frame.windows(2).filter(|w| (w[0] >= 0.0) != (w[1] >= 0.0)).count();
    let zcr = crossings as f64 / (n - 1) as f64;

    let mean_sq = frame.iter().map(|x| x * x).sum::<f64>() / n as f64;
    let rms = mean_sq.sqrt();
    let loudness = if mean_sq > 0.0 {
        10.0 * (mean_sq + 10f64.powf(cfg.loudness_floor_db / 10.0)).log10()
    } else {
        cfg.loudness_floor_db
    };

    let power = &spectrum.power;
    let total_power: f64 = power.iter().sum();
    let (centroid, bandwidth, rolloff) = if total_power > 0.0 {
        let mag: Vec<f64> = power.iter().map(|p| p.sqrt()).collect();
        let mag_sum: f64 = mag.iter().sum();
        let centroid = mag.iter().enumerate().map(|(k, m)| m * spectrum.frequency(k)).sum::<f64>() / mag_sum;
        let var = mag
            .iter()
            .enumerate()
            .map(|(k, m)| m * (spectrum.frequency(k) - centroid).powi(2))
            .sum::<f64>()
            / mag_sum;
        let target = cfg.rolloff_fraction * total_power;
        let mut acc = 0.0;
        let mut roll_bin = power.len() - 1;
        for (k, p) in power.iter().enumerate() {
            acc += p;
            if acc >= target {
                roll_bin = k;
                break;
            }
        }
        (centroid, var.sqrt(), spectrum.frequency(roll_bin))
    } else {
        (0.0, 0.0, 0.0)
    };

    let floored: Vec<f64> = power.iter().map(|p| p.max(cfg.log_floor)).collect();
    let log_mean = floored.iter().map(|p| p.ln()).sum::<f64>() / floored.len() as f64;
    let arith = floored.iter().sum::<f64>() / floored.len() as f64;
    let uniform = floored.iter().all(|&p| p == floored[0]);
    let flatness = if uniform { 1.0 } else { (log_mean.exp() / arith).clamp(0.0, 1.0) };

    SpectralDescriptors {
        zcr,
        centroid,
        bandwidth,
        contrast: band_contrast(spectrum, cfg),
        flatness,
        rolloff,
        loudness,
        rms,
    }
}

/// Octave-band peak/valley contrast in dB, averaged over non-empty bands.
/// Band edges: `[0, f0), [f0, 2 f0), ..., [f0 2^(B-2), Nyquist]`.
fn band_contrast(spectrum: &PowerSpectrum, cfg: &DspConfig) -> f64 {
    let nyquist = spectrum.frequency(spectrum.power.len() - 1);
    let mut edges = vec![0.0];
    edges.extend((0..cfg.contrast_bands - 1).map(|i| cfg.contrast_fmin * 2f64.powi(i as i32)));
    edges.push(f64::INFINITY);

    let db = |p: f64| 10.0 * (p + cfg.log_floor).log10();
    let mut total = 0.0;
    let mut used = 0usize;
    for b in edges.windows(2) {
        let (lo, hi) = (b[0], b[1]);
        if lo > nyquist {
            break;
        }
        let mut band: Vec<f64> = spectrum
            .power
            .iter()
            .enumerate()
            .filter(|(k, _)| {
                let f = spectrum.frequency(*k);
                f >= lo && f < hi
            })
            .map(|(_, &p)| p)
            .collect();
        if band.is_empty() {
            continue;
        }
        band.sort_by(f64::total_cmp);
        let q = ((cfg.contrast_quantile * band.len() as f64).round() as usize).max(1);
        let valley = band[..q].iter().sum::<f64>() / q as f64;
        let peak = band[band.len() - q..].iter().sum::<f64>() / q as f64;
        total += db(peak) - db(valley);
        used += 1;
    }
    if used == 0 {
        0.0
    } else {
        total / used as f64
    }
}
