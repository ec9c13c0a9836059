/// Regression deltas over a centered window of `width` frames, replicating
/// the edge frames. Equivalent to the least-squares slope of each window.
///
/// # Panics
/// If `width` is even or smaller than 3.
pub fn delta(seq: &[f64], width: usize) -> Vec<f64> {
    assert!(width >= 3 && width % 2 == 1, "delta width must be odd and >= 3");
    if seq.is_empty() {
        return Vec::new();
    }
    let half = (width / 2) as isize;
    let last = seq.len() as isize - 1;
    let at = |t: isize| seq[t.clamp(0, last) as usize];
    let denom = 2.0 * (1..=half).map(|n| (n * n) as f64).sum::<f64>();
    (0..seq.len() as isize)
        .map(|t| (1..=half).map(|n| n as f64 * (at(t + n) - at(t - n))).sum::<f64>() / denom)
        .collect()
}
