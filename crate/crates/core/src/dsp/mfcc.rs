use std::f64::consts::PI;

use super::spectral::SpectrumAnalyzer;

#[derive(Debug, Clone, PartialEq)]
pub struct MfccConfig {
    pub n_mels: usize,
    pub n_mfcc: usize,
    pub fmin: f64,
    pub fmax: f64,
    pub log_floor: f64,
}

/// HTK mel scale.
pub fn hz_to_mel(hz: f64) -> f64 {
    2595.0 * (1.0 + hz / 700.0).log10()
}

pub fn mel_to_hz(mel: f64) -> f64 {
    700.0 * (10f64.powf(mel / 2595.0) - 1.0)
}

/// Triangular mel filters (unit peak) over the `n_fft / 2 + 1` power-spectrum bins.
pub fn mel_filterbank(n_fft: usize, sample_rate: u32, n_mels: usize, fmin: f64, fmax: f64) -> Vec<Vec<f64>> {
    let n_bins = n_fft / 2 + 1;
    let (lo, hi) = (hz_to_mel(fmin), hz_to_mel(fmax));
    let edges: Vec<f64> = (0..n_mels + 2)
        .map(|i| mel_to_hz(lo + (hi - lo) * i as f64 / (n_mels + 1) as f64))
        .collect();
    let bin_hz = sample_rate as f64 / n_fft as f64;
    (0..n_mels)
        .map(|m| {
            let (left, center, right) = (edges[m], edges[m + 1], edges[m + 2]);
            (0..n_bins)
                .map(|k| {
                    let f = k as f64 * bin_hz;
                    let rising = (f - left) / (center - left);
                    let falling = (right - f) / (right - center);
                    rising.min(falling).max(0.0)
                })
                .collect()
        })
        .collect()
}

/// Orthonormal DCT-II, keeping the first `n_out` coefficients.
pub(crate) fn dct_ortho(x: &[f64], n_out: usize) -> Vec<f64> {
    let m = x.len() as f64;
    (0..n_out)
        .map(|k| {
            let s: f64 = x
                .iter()
                .enumerate()
                .map(|(i, v)| v * (PI * k as f64 * (i as f64 + 0.5) / m).cos())
                .sum();
            let scale = if k == 0 { (1.0 / m).sqrt() } else { (2.0 / m).sqrt() };
            s * scale
        })
        .collect()
}

pub(crate) fn mfcc_from_power(power: &[f64], filterbank: &[Vec<f64>], cfg: &MfccConfig) -> Vec<f64> {
    let log_mel: Vec<f64> = filterbank
        .iter()
        .map(|w| {
            let e: f64 = w.iter().zip(power).map(|(a, b)| a * b).sum();
            e.max(cfg.log_floor).ln()
        })
        .collect();
    dct_ortho(&log_mel, cfg.n_mfcc)
}

/// MFCCs for each (unwindowed) frame: Hann window, power spectrum, mel
/// filterbank, natural log with floor, orthonormal DCT-II.
pub fn mfcc(frames: &[Vec<f64>], sample_rate: u32, cfg: &MfccConfig) -> Vec<Vec<f64>> {
    let Some(first) = frames.first() else {
        return Vec::new();
    };
    let analyzer = SpectrumAnalyzer::new(first.len(), sample_rate);
    let fb = mel_filterbank(first.len(), sample_rate, cfg.n_mels, cfg.fmin, cfg.fmax);
    frames
        .iter()
        .map(|f| mfcc_from_power(&analyzer.power(f).power, &fb, cfg))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg() -> MfccConfig {
        MfccConfig { n_mels: 40, n_mfcc: 13, fmin: 0.0, fmax: 8000.0, log_floor: 1e-10 }
    }

    #[test]
    fn mel_scale_round_trip() {
        for hz in [0.0, 100.0, 1000.0, 8000.0] {
            assert!((mel_to_hz(hz_to_mel(hz)) - hz).abs() < 1e-9);
        }
        assert!((hz_to_mel(1000.0) - 1000.0).abs() < 0.1);
    }

    #[test]
    fn silent_frame_is_dct_of_constant_floor() {
        let out = mfcc(&[vec![0.0; 512]], 16000, &cfg());
        let expect0 = (40f64).sqrt() * (1e-10f64).ln();
        assert!((out[0][0] - expect0).abs() < 1e-9);
        assert!(out[0][1..].iter().all(|c| c.abs() < 1e-9));
    }

    #[test]
    fn gain_shifts_only_c0() {
        let frame: Vec<f64> = (0..512)
            .map(|i| (i as f64 * 0.37).sin() * 0.3 + (i as f64 * 1.91).cos() * 0.1)
            .collect();
        let g = 3.0;
        let scaled: Vec<f64> = frame.iter().map(|x| x * g).collect();
        let a = &mfcc(&[frame], 16000, &cfg())[0];
        let b = &mfcc(&[scaled], 16000, &cfg())[0];
        // log(g^2 * e) = log e + 2 log g on every band; the DCT maps the constant to c0 only
        assert!((b[0] - a[0] - 2.0 * g.ln() * 40f64.sqrt()).abs() < 1e-6);
        for k in 1..13 {
            assert!((a[k] - b[k]).abs() < 1e-6);
        }
    }

    #[test]
    fn filters_have_unit_peak_region() {
        let fb = mel_filterbank(2048, 22050, 64, 0.0, 11025.0);
        assert_eq!(fb.len(), 64);
        for w in &fb {
            assert_eq!(w.len(), 1025);
            let peak = w.iter().cloned().fold(0.0, f64::max);
            assert!(peak > 0.3 && peak <= 1.0);
        }
    }
}
