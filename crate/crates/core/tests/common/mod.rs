//! Reference implementations used as test oracles. Everything in this file
//! is written from the textbook definitions, without calling into the
//! crate's numeric code; `checks` builds on it.
#![allow(dead_code)]

pub mod checks;

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn sine(freq: f64, sample_rate: u32, n: usize, amp: f64) -> Vec<f64> {
    (0..n).map(|t| amp * (2.0 * PI * freq * t as f64 / sample_rate as f64).sin()).collect()
}

pub fn uniform_noise(seed: u64, n: usize, amp: f64) -> Vec<f64> {
    let mut r = rng(seed);
    (0..n).map(|_| r.gen_range(-amp..amp)).collect()
}

/// |X_k|^2 of the periodic-Hann-windowed frame by direct summation, k = 0..=n/2.
pub fn naive_power_spectrum(frame: &[f64]) -> Vec<f64> {
    let n = frame.len();
    let w: Vec<f64> = (0..n).map(|i| frame[i] * (0.5 - 0.5 * (2.0 * PI * i as f64 / n as f64).cos())).collect();
    (0..=n / 2)
        .map(|k| {
            let (mut re, mut im) = (0.0, 0.0);
            for (i, x) in w.iter().enumerate() {
                let a = -2.0 * PI * (k * i % n) as f64 / n as f64;
                re += x * a.cos();
                im += x * a.sin();
            }
            re * re + im * im
        })
        .collect()
}

/// Triangular HTK mel filters (unit peak) with edges equally spaced on
/// mel = 1127 ln(1 + f/700).
pub fn naive_mel_filters(n_fft: usize, sample_rate: u32, n_mels: usize, fmin: f64, fmax: f64) -> Vec<Vec<f64>> {
    let mel = |f: f64| 1127.0 * (1.0 + f / 700.0).ln();
    let inv = |m: f64| 700.0 * ((m / 1127.0).exp() - 1.0);
    let step = (mel(fmax) - mel(fmin)) / (n_mels + 1) as f64;
    let edge = |i: usize| inv(mel(fmin) + step * i as f64);
    let mut filters = vec![vec![0.0; n_fft / 2 + 1]; n_mels];
    for (m, filt) in filters.iter_mut().enumerate() {
        let (l, c, r) = (edge(m), edge(m + 1), edge(m + 2));
        for (k, w) in filt.iter_mut().enumerate() {
            let f = k as f64 * sample_rate as f64 / n_fft as f64;
            *w = if f > l && f <= c {
                (f - l) / (c - l)
            } else if f > c && f < r {
                (r - f) / (r - c)
            } else {
                0.0
            };
        }
    }
    filters
}

/// Orthonormal DCT-II as an explicit matrix product.
pub fn naive_dct(x: &[f64], n_out: usize) -> Vec<f64> {
    let m = x.len();
    (0..n_out)
        .map(|k| {
            let norm = if k == 0 { (1.0 / m as f64).sqrt() } else { (2.0 / m as f64).sqrt() };
            norm * (0..m).map(|i| x[i] * (PI / m as f64 * (i as f64 + 0.5) * k as f64).cos()).sum::<f64>()
        })
        .collect()
}

pub fn naive_mfcc(frame: &[f64], sample_rate: u32, n_mels: usize, n_mfcc: usize, floor: f64) -> Vec<f64> {
    let p = naive_power_spectrum(frame);
    let filters = naive_mel_filters(frame.len(), sample_rate, n_mels, 0.0, sample_rate as f64 / 2.0);
    let logmel: Vec<f64> = filters
        .iter()
        .map(|f| f.iter().zip(&p).map(|(a, b)| a * b).sum::<f64>().max(floor).ln())
        .collect();
    naive_dct(&logmel, n_mfcc)
}

/// Cyclic Jacobi eigen-decomposition of a symmetric matrix. Returns
/// eigenpairs sorted by descending eigenvalue; vectors are unit columns.
pub fn jacobi_eigen(a: &[Vec<f64>]) -> (Vec<f64>, Vec<Vec<f64>>) {
    let n = a.len();
    let mut a: Vec<Vec<f64>> = a.to_vec();
    let mut v: Vec<Vec<f64>> = (0..n).map(|i| (0..n).map(|j| if i == j { 1.0 } else { 0.0 }).collect()).collect();
    for _sweep in 0..100 {
        let off: f64 = (0..n).flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j))).map(|(i, j)| a[i][j].powi(2)).sum();
        if off < 1e-22 {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                if a[p][q].abs() < 1e-300 {
                    continue;
                }
                let theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let (akp, akq) = (a[k][p], a[k][q]);
                    a[k][p] = c * akp - s * akq;
                    a[k][q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let (apk, aqk) = (a[p][k], a[q][k]);
                    a[p][k] = c * apk - s * aqk;
                    a[q][k] = s * apk + c * aqk;
                }
                for row in v.iter_mut() {
                    let (vp, vq) = (row[p], row[q]);
                    row[p] = c * vp - s * vq;
                    row[q] = s * vp + c * vq;
                }
            }
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&x, &y| a[y][y].total_cmp(&a[x][x]));
    let vals = order.iter().map(|&i| a[i][i]).collect();
    let vecs = order.iter().map(|&i| (0..n).map(|r| v[r][i]).collect()).collect();
    (vals, vecs)
}

pub fn sample_covariance(x: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let n = x.len();
    let d = x[0].len();
    let mean: Vec<f64> = (0..d).map(|j| x.iter().map(|r| r[j]).sum::<f64>() / n as f64).collect();
    (0..d)
        .map(|i| {
            (0..d)
                .map(|j| x.iter().map(|r| (r[i] - mean[i]) * (r[j] - mean[j])).sum::<f64>() / (n - 1) as f64)
                .collect()
        })
        .collect()
}

pub fn rbf(gamma: f64, a: &[f64], b: &[f64]) -> f64 {
    (-gamma * a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>()).exp()
}

pub fn linear(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// `-1/2 d'Kd - eps |d|_1 + y'd`
pub fn dual_value(k: &[Vec<f64>], y: &[f64], eps: f64, d: &[f64]) -> f64 {
    let n = d.len();
    let mut quad = 0.0;
    for i in 0..n {
        for j in 0..n {
            quad += d[i] * d[j] * k[i][j];
        }
    }
    -0.5 * quad - eps * d.iter().map(|v| v.abs()).sum::<f64>() + y.iter().zip(d).map(|(a, b)| a * b).sum::<f64>()
}

/// Maximizes the epsilon-SVR dual over `{d : sum d = 0, |d_i| <= C}` by
/// coarse-to-fine grid search on the first n-1 coordinates. The final grid
/// spacing is below 1e-4 * C.
pub fn brute_force_dual(k: &[Vec<f64>], y: &[f64], eps: f64, c: f64) -> (f64, Vec<f64>) {
    let n = y.len();
    assert!((2..=4).contains(&n));
    let free = n - 1;
    let steps: usize = 40;
    let mut center = vec![0.0; free];
    let mut half = c;
    let mut best = (f64::NEG_INFINITY, vec![0.0; n]);
    while half > 1e-5 * c {
        let h = 2.0 * half / steps as f64;
        let total = (steps + 1).pow(free as u32);
        for idx in 0..total {
            let mut rem = idx;
            let mut d = vec![0.0; n];
            for (j, cj) in center.iter().enumerate() {
                d[j] = (cj - half + h * (rem % (steps + 1)) as f64).clamp(-c, c);
                rem /= steps + 1;
            }
            let last = -d[..free].iter().sum::<f64>();
            if last.abs() > c {
                continue;
            }
            d[free] = last;
            let v = dual_value(k, y, eps, &d);
            if v > best.0 {
                best = (v, d);
            }
        }
        center = best.1[..free].to_vec();
        half *= 0.25;
    }
    best
}

/// Largest KKT violation of a dual solution `d` with bias `b`:
/// residual r_i = y_i - f(x_i) must satisfy |r| <= eps at d = 0,
/// r = +-eps strictly between bounds, and r beyond the tube at the bounds.
pub fn kkt_violation(k: &[Vec<f64>], y: &[f64], d: &[f64], b: f64, c: f64, eps: f64) -> f64 {
    let n = y.len();
    let bound_tol = 1e-9 * c.max(1.0);
    (0..n)
        .map(|i| {
            let f = (0..n).map(|j| d[j] * k[i][j]).sum::<f64>() + b;
            let r = y[i] - f;
            let di = d[i];
            if di.abs() <= bound_tol {
                (r.abs() - eps).max(0.0)
            } else if di >= c - bound_tol {
                (eps - r).max(0.0)
            } else if di <= -c + bound_tol {
                (r + eps).max(0.0)
            } else if di > 0.0 {
                (r - eps).abs()
            } else {
                (r + eps).abs()
            }
        })
        .fold(0.0, f64::max)
}

pub fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}
