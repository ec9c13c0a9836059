//! Shared fixtures and cross-checks that drive the crate and compare it
//! against the reference code in the parent module.

use moodcap_core::dsp::{frame_features, DspConfig, FrameFeatures, Waveform, FRAME_FEATURE_NAMES};
use moodcap_core::regression::{svr_fit_with, Gamma, SmoConfig, SvrParams};
use rand::Rng;

use super::{jacobi_eigen, mean, rng, sample_covariance, sine, uniform_noise};

pub const WAVCAPS: &str = "I will give you a number of lists containing sound events occurred sequentially in time. Process each individually. Write a one-sentence audio caption to describe these sounds. Make sure you are using grammatical subject-verb-object sentences. Directly describe the sounds and avoid using the word \"heard\". The caption should be less than 20 words.";
pub const SCENE: &str = "I will provide a list containing chronological sound events of an auditory scene. Write a one-sentence audio caption to describe the scene. Make sure to use an active voice. Describe the scene without simply listing the sounds. The caption should be less than 20 words.";
pub const ADDON: &str = "I will also provide a mood. Please emphasize this mood in your caption.";
pub const REWRITE: &str = "I will give you a sentence describing a sound scene, and a mood. Please rewrite the sentence, emphasizing the indicated mood.";

/// Timelines of the bundled strong-label fixture, worked out by hand.
pub const FIXTURE_TIMELINES: [(&str, &[&str]); 10] = [
    ("clip00", &["Thunder", "Rain on surface"]),
    ("clip01", &["Wind", "Bird vocalization, bird call, bird song"]),
    ("clip02", &["Walk, footsteps", "Speech"]),
    ("clip03", &["Car", "Dog"]),
    ("clip04", &["Stream"]),
    ("clip05", &["Speech", "Car", "Vehicle horn, car horn, honking"]),
    ("clip06", &["Rain on surface", "Thunder"]),
    ("clip07", &["Bird vocalization, bird call, bird song", "Wind"]),
    ("clip08", &["Walk, footsteps", "Dog"]),
    ("clip09", &["Speech", "Music"]),
];

pub const SR: u32 = 22050;
pub const GAIN_TOL: f64 = 1e-5;

pub fn frames_of(x: &[f64]) -> FrameFeatures {
    frame_features(&Waveform::new(x.to_vec(), SR).unwrap(), &DspConfig::default()).unwrap()
}

pub fn col(name: &str) -> usize {
    FRAME_FEATURE_NAMES.iter().position(|n| *n == name).unwrap()
}

/// Noise-plus-tone test signals, long enough for several frames and loud
/// enough that the log floors never bind. Returns the signal and a gain.
pub fn gain_test_signal(seed: u64) -> (Vec<f64>, f64) {
    let mut r = rng(1000 + seed);
    let f = r.gen_range(100.0..4000.0);
    let n = 2048 + 512 * 20;
    let tone = sine(f, SR, n, 0.3);
    let noise = uniform_noise(seed, n, 0.3);
    let x = tone.iter().zip(&noise).map(|(a, b)| a + b).collect();
    (x, r.gen_range(0.5..4.0))
}

/// Worst deviation from gain invariance over all frames: scale-free columns
/// must not move, mfcc_0 shifts by 2 sqrt(n_mels) ln g, rms and its delta scale by g.
pub fn gain_violation(x: &[f64], g: f64) -> f64 {
    let a = frames_of(x);
    let scaled: Vec<f64> = x.iter().map(|v| v * g).collect();
    let b = frames_of(&scaled);
    let invariant: Vec<usize> = (1..13)
        .map(|k| col(&format!("mfcc_{k}")))
        .chain((0..13).map(|k| col(&format!("delta_mfcc_{k}"))))
        .chain(
            ["zcr", "spectral_centroid", "spectral_bandwidth", "spectral_contrast", "spectral_flatness", "spectral_rolloff", "delta_loudness"]
                .iter()
                .map(|n| col(n)),
        )
        .collect();
    let mfcc0_shift = 2.0 * 64f64.sqrt() * g.ln();
    let mut worst: f64 = 0.0;
    for (ra, rb) in a.rows.iter().zip(&b.rows) {
        for &c in &invariant {
            worst = worst.max((ra[c] - rb[c]).abs());
        }
        worst = worst.max((rb[col("mfcc_0")] - ra[col("mfcc_0")] - mfcc0_shift).abs());
        worst = worst.max((rb[col("rms")] - g * ra[col("rms")]).abs());
        worst = worst.max((rb[col("delta_rms")] - g * ra[col("delta_rms")]).abs());
    }
    worst
}

/// Validation MSE of one fold and one grid cell, recomputed from scratch:
/// population-sd standardization, Jacobi PCA, then an SVR fit.
pub fn cv_fold_mse(x: &[Vec<f64>], y: &[f64], val: &[usize], k: usize, p: &SvrParams, smo: &SmoConfig) -> f64 {
    let fit: Vec<usize> = (0..x.len()).filter(|i| !val.contains(i)).collect();
    let d = x[0].len();
    let nf = fit.len() as f64;
    let mu: Vec<f64> = (0..d).map(|j| fit.iter().map(|&i| x[i][j]).sum::<f64>() / nf).collect();
    let sd: Vec<f64> = (0..d)
        .map(|j| {
            let s = (fit.iter().map(|&i| (x[i][j] - mu[j]).powi(2)).sum::<f64>() / nf).sqrt();
            if s > 1e-12 {
                s
            } else {
                1.0
            }
        })
        .collect();
    let z = |i: usize| -> Vec<f64> { (0..d).map(|j| (x[i][j] - mu[j]) / sd[j]).collect() };
    let z_fit: Vec<Vec<f64>> = fit.iter().map(|&i| z(i)).collect();
    let center: Vec<f64> = (0..d).map(|j| z_fit.iter().map(|r| r[j]).sum::<f64>() / nf).collect();
    let (_, vecs) = jacobi_eigen(&sample_covariance(&z_fit));
    let comps: Vec<Vec<f64>> = vecs
        .into_iter()
        .take(k)
        .map(|mut v| {
            let pivot = (0..d).fold(0, |b, i| if v[i].abs() > v[b].abs() { i } else { b });
            if v[pivot] < 0.0 {
                v.iter_mut().for_each(|e| *e = -*e);
            }
            v
        })
        .collect();
    let project = |r: &[f64]| -> Vec<f64> {
        comps.iter().map(|c| c.iter().zip(r).zip(&center).map(|((w, a), m)| w * (a - m)).sum()).collect()
    };
    let p_fit: Vec<Vec<f64>> = z_fit.iter().map(|r| project(r)).collect();
    let y_fit: Vec<f64> = fit.iter().map(|&i| y[i]).collect();
    let gamma = match p.gamma {
        Gamma::Value(g) => g,
        Gamma::Scale => {
            let all: Vec<f64> = p_fit.iter().flatten().copied().collect();
            let m = mean(&all);
            1.0 / (k as f64 * all.iter().map(|v| (v - m).powi(2)).sum::<f64>() / all.len() as f64)
        }
    };
    let params = SvrParams { gamma: Gamma::Value(gamma), ..*p };
    let model = svr_fit_with(&p_fit, &y_fit, &params, smo).unwrap();
    let errs: Vec<f64> = val.iter().map(|&i| (model.predict_row(&project(&z(i))) - y[i]).powi(2)).collect();
    mean(&errs)
}

/// Regression data with a mostly linear target.
pub fn grid_dataset(seed: u64, n: usize, d: usize) -> (Vec<Vec<f64>>, Vec<f64>) {
    let mut r = rng(seed);
    let x: Vec<Vec<f64>> = (0..n).map(|_| (0..d).map(|j| r.gen_range(-1.0..1.0) * (1.0 + j as f64)).collect()).collect();
    let y = x.iter().map(|row| (0.3 * row[0] - 0.1 * row[1] + 0.05 * r.gen_range(-1.0..1.0)).clamp(-1.0, 1.0)).collect();
    (x, y)
}

/// Small random SVR problem: 2 to 4 points in two dimensions, RBF kernel.
pub struct SmallSvr {
    pub x: Vec<Vec<f64>>,
    pub y: Vec<f64>,
    pub c: f64,
    pub eps: f64,
    pub gamma: f64,
}

pub fn small_svr(seed: u64) -> SmallSvr {
    let mut r = rng(seed);
    let n = r.gen_range(2..=4);
    SmallSvr {
        x: (0..n).map(|_| vec![r.gen_range(-1.0..1.0), r.gen_range(-1.0..1.0)]).collect(),
        y: (0..n).map(|_| r.gen_range(-1.0..1.0)).collect(),
        c: r.gen_range(0.2..3.0),
        eps: r.gen_range(0.0..0.3),
        gamma: r.gen_range(0.2..2.0),
    }
}

/// Matrix with uneven column scales so the spectrum is spread out.
pub fn pca_matrix(seed: u64, n: usize, d: usize) -> Vec<Vec<f64>> {
    let mut r = rng(seed);
    let scales: Vec<f64> = (0..d).map(|j| 0.2 + 3.0 / (1.0 + j as f64 * 0.3)).collect();
    (0..n).map(|_| (0..d).map(|j| r.gen_range(-1.0..1.0) * scales[j]).collect()).collect()
}
