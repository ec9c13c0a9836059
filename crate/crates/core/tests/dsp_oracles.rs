mod common;

use common::checks::{col, frames_of, gain_test_signal, gain_violation, GAIN_TOL, SR};
use common::{naive_mfcc, naive_power_spectrum, sine, uniform_noise};
use moodcap_core::dsp::{extract_features, frame_signal, mfcc, DspConfig, MfccConfig, Waveform, FEATURE_DIM};
use proptest::prelude::*;

const MFCC_TOL: f64 = 1e-4;

#[test]
fn mfcc_matches_direct_dft_on_a_sine_frame() {
    let frame = sine(440.0, SR, 2048, 0.5);
    let cfg = MfccConfig { n_mels: 64, n_mfcc: 13, fmin: 0.0, fmax: 11025.0, log_floor: 1e-10 };
    let got = &mfcc(&[frame.clone()], SR, &cfg)[0];
    let want = naive_mfcc(&frame, SR, 64, 13, 1e-10);
    for (k, (g, w)) in got.iter().zip(&want).enumerate() {
        assert!((g - w).abs() < MFCC_TOL, "coef {k}: {g} vs {w}");
    }
}

#[test]
fn mfcc_matches_direct_dft_on_noise_frames() {
    let cfg = MfccConfig { n_mels: 64, n_mfcc: 13, fmin: 0.0, fmax: 11025.0, log_floor: 1e-10 };
    for seed in 0..3 {
        let frame = uniform_noise(seed, 2048, 0.3);
        let got = &mfcc(&[frame.clone()], SR, &cfg)[0];
        let want = naive_mfcc(&frame, SR, 64, 13, 1e-10);
        for (g, w) in got.iter().zip(&want) {
            assert!((g - w).abs() < MFCC_TOL);
        }
    }
}

#[test]
fn gain_invariance_on_fifty_seeded_signals() {
    for seed in 0..50 {
        let (x, g) = gain_test_signal(seed);
        let v = gain_violation(&x, g);
        assert!(v < GAIN_TOL, "seed {seed}, gain {g}: violation {v}");
    }
}

#[test]
fn loudness_shifts_by_the_gain_in_db() {
    let (x, _) = gain_test_signal(7);
    let a = frames_of(&x);
    let b = frames_of(&x.iter().map(|v| v * 2.0).collect::<Vec<_>>());
    let want = 20.0 * 2f64.log10();
    for (ra, rb) in a.rows.iter().zip(&b.rows) {
        // the additive floor inside the log keeps this from being exact
        assert!((rb[col("loudness")] - ra[col("loudness")] - want).abs() < 1e-3);
    }
}

#[test]
fn time_reversal_preserves_zcr_and_rms_multisets() {
    for seed in 0..5 {
        let n = 2048 + 512 * 12;
        let x: Vec<f64> = uniform_noise(seed, n, 0.5).iter().zip(sine(300.0, SR, n, 0.2)).map(|(a, b)| a + b).collect();
        let rev: Vec<f64> = x.iter().rev().copied().collect();
        let (a, b) = (frames_of(&x), frames_of(&rev));
        for name in ["zcr", "rms"] {
            let mut ca = a.column(col(name));
            let mut cb = b.column(col(name));
            ca.sort_by(f64::total_cmp);
            cb.sort_by(f64::total_cmp);
            for (p, q) in ca.iter().zip(&cb) {
                assert!((p - q).abs() < 1e-12, "{name}");
            }
        }
    }
}

#[test]
fn silence_is_finite() {
    let w = Waveform::new(vec![0.0; SR as usize], SR).unwrap();
    let v = extract_features("silence", &w, &DspConfig::default()).unwrap();
    assert_eq!(v.values.len(), 72);
    assert!(v.values.iter().all(|x| x.is_finite()));
}

#[test]
fn zcr_of_a_long_sine_tracks_twice_its_frequency() {
    for f in [220.0, 440.0, 1000.0] {
        let x = sine(f, SR, 6 * SR as usize, 0.5);
        let w = Waveform::new(x, SR).unwrap();
        let v = extract_features("s", &w, &DspConfig::default()).unwrap();
        let zcr = v.get("mean_zcr").unwrap();
        let want = 2.0 * f / SR as f64;
        assert!((zcr - want).abs() / want < 0.05, "f={f}: {zcr} vs {want}");
    }
}

fn oracle_flatness(frame: &[f64]) -> f64 {
    let p: Vec<f64> = naive_power_spectrum(frame).iter().map(|v| v.max(1e-10)).collect();
    let geo = (p.iter().map(|v| v.ln()).sum::<f64>() / p.len() as f64).exp();
    geo / (p.iter().sum::<f64>() / p.len() as f64)
}

#[test]
fn flatness_separates_noise_from_tone() {
    let noise = uniform_noise(3, 2048, 0.5);
    let tone = sine(1000.0, SR, 2048, 0.5);
    let fn_ = frames_of(&noise).rows[0][col("spectral_flatness")];
    let ft = frames_of(&tone).rows[0][col("spectral_flatness")];
    assert!((fn_ - oracle_flatness(&noise)).abs() < 1e-9);
    assert!((ft - oracle_flatness(&tone)).abs() < 1e-9);
    assert!(fn_ >= 0.5, "noise flatness {fn_}");
    assert!(ft <= 0.05, "tone flatness {ft}");
}

#[test]
fn frame_layout_matches_hop() {
    let x = uniform_noise(1, 2048 + 512 * 3, 0.1);
    assert_eq!(frame_signal(&x, 2048, 512).len(), 4);
    assert_eq!(frames_of(&x).rows.len(), 4);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn feature_vector_is_always_72_finite_values(len in 1usize..6000, seed in 0u64..1000, amp in 0.0f64..1.0) {
        let x = uniform_noise(seed, len, amp.max(1e-12));
        let w = Waveform::new(x, SR).unwrap();
        let v = extract_features("p", &w, &DspConfig::default()).unwrap();
        prop_assert_eq!(v.values.len(), FEATURE_DIM);
        prop_assert!(v.values.iter().all(|x| x.is_finite()));
        prop_assert!(v.stds().iter().all(|s| *s >= 0.0));
    }

    #[test]
    fn gain_invariance_holds_for_arbitrary_seeds(seed in 0u64..10_000) {
        let (x, g) = gain_test_signal(seed);
        prop_assert!(gain_violation(&x, g) < GAIN_TOL);
    }
}
