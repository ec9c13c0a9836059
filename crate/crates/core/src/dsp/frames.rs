use std::f64::consts::PI;

/// Number of frames produced by [`frame_signal`].
pub fn frame_count(len: usize, frame_len: usize, hop: usize) -> usize {
    if len >= frame_len {
        (len - frame_len) / hop + 1
    } else {
        1
    }
}

/// Splits a signal into overlapping frames. A signal shorter than one frame
/// yields a single zero-padded frame.
///
/// Frames are returned unwindowed; spectral analysis applies [`hann_window`].
pub fn frame_signal(samples: &[f64], frame_len: usize, hop: usize) -> Vec<Vec<f64>> {
    assert!(frame_len >= 2 && hop >= 1, "frame_len >= 2 and hop >= 1 required");
    if samples.len() < frame_len {
        let mut frame = samples.to_vec();
        frame.resize(frame_len, 0.0);
        return vec![frame];
    }
    (0..frame_count(samples.len(), frame_len, hop))
        .map(|i| samples[i * hop..i * hop + frame_len].to_vec())
        .collect()
}

/// Periodic Hann window.
pub fn hann_window(len: usize) -> Vec<f64> {
    (0..len)
        .map(|n| 0.5 - 0.5 * (2.0 * PI * n as f64 / len as f64).cos())
        .collect()
}
