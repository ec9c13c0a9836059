//! Epsilon-support vector regression trained by sequential minimal optimization.
//!
//! The dual is solved in the doubled-variable form: `beta = [alpha; alpha*]`
//! with signs `s = [+1; -1]`, minimizing `1/2 beta' Q beta + p' beta` where
//! `Q_tu = s_t s_u K(x_t, x_u)`, `p = [eps - y; eps + y]`, subject to
//! `s' beta = 0` and `0 <= beta <= C`. Each step updates the maximal
//! KKT-violating pair.

use serde::{Deserialize, Serialize};

use super::{check_rows, RegressionError};

const TAU: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Kernel {
    Rbf,
    Linear,
    /// `(gamma <x, z>)^3`
    Poly,
}

impl Kernel {
    pub fn name(self) -> &'static str {
        match self {
            Kernel::Rbf => "rbf",
            Kernel::Linear => "linear",
            Kernel::Poly => "poly",
        }
    }

    pub fn eval(self, gamma: f64, a: &[f64], b: &[f64]) -> f64 {
        match self {
            Kernel::Rbf => {
                let d2: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum();
                (-gamma * d2).exp()
            }
            Kernel::Linear => dot(a, b),
            Kernel::Poly => (gamma * dot(a, b)).powi(3),
        }
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Kernel width: a fixed value, or `1 / (k * var(X))` resolved at fit time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Gamma {
    Scale,
    Value(f64),
}

impl Gamma {
    pub fn resolve(self, x: &[Vec<f64>]) -> f64 {
        match self {
            Gamma::Value(g) => g,
            Gamma::Scale => {
                let k = x.first().map_or(1, Vec::len).max(1);
                let n = (x.len() * k) as f64;
                let mean = x.iter().flatten().sum::<f64>() / n;
                let var = x.iter().flatten().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
                if var > 0.0 {
                    1.0 / (k as f64 * var)
                } else {
                    1.0
                }
            }
        }
    }

    /// Ordering used for grid tie-breaking: `scale` first, then by value.
    pub(crate) fn rank_key(self) -> (u8, f64) {
        match self {
            Gamma::Scale => (0, 0.0),
            Gamma::Value(g) => (1, g),
        }
    }
}

impl std::fmt::Display for Gamma {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Gamma::Scale => f.write_str("scale"),
            Gamma::Value(g) => write!(f, "{g}"),
        }
    }
}

impl Serialize for Gamma {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            Gamma::Scale => s.serialize_str("scale"),
            Gamma::Value(g) => s.serialize_f64(*g),
        }
    }
}

impl<'de> Deserialize<'de> for Gamma {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Repr {
            Name(String),
            Value(f64),
        }
        match Repr::deserialize(d)? {
            Repr::Name(s) if s == "scale" => Ok(Gamma::Scale),
            Repr::Name(s) => Err(serde::de::Error::custom(format!("unknown gamma {s:?}, expected \"scale\" or a number"))),
            Repr::Value(g) => Ok(Gamma::Value(g)),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SvrParams {
    pub c: f64,
    pub gamma: Gamma,
    pub kernel: Kernel,
    pub epsilon: f64,
}

impl SvrParams {
    pub fn validate(&self) -> Result<(), RegressionError> {
        if !(self.c > 0.0 && self.c.is_finite()) {
            return Err(RegressionError::InvalidParams(format!("C must be positive, got {}", self.c)));
        }
        if let Gamma::Value(g) = self.gamma {
            if !(g > 0.0 && g.is_finite()) {
                return Err(RegressionError::InvalidParams(format!("gamma must be positive, got {g}")));
            }
        }
        if !(self.epsilon >= 0.0 && self.epsilon.is_finite()) {
            return Err(RegressionError::InvalidParams(format!("epsilon must be >= 0, got {}", self.epsilon)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SmoConfig {
    /// Stop once the maximal violation `m(beta) - M(beta)` drops below this.
    pub tolerance: f64,
    pub max_iter: usize,
}

impl Default for SmoConfig {
    fn default() -> Self {
        Self { tolerance: 1e-3, max_iter: 1_000_000 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SvrModel {
    pub params: SvrParams,
    /// Resolved kernel width actually used.
    pub gamma_value: f64,
    pub support_vectors: Vec<Vec<f64>>,
    /// `alpha_i - alpha*_i` for each support vector.
    pub dual_coefs: Vec<f64>,
    pub bias: f64,
    pub iterations: usize,
}

impl SvrModel {
    pub fn input_dim(&self) -> Option<usize> {
        self.support_vectors.first().map(Vec::len)
    }

    pub fn predict_row(&self, x: &[f64]) -> f64 {
        self.support_vectors
            .iter()
            .zip(&self.dual_coefs)
            .map(|(sv, c)| c * self.params.kernel.eval(self.gamma_value, sv, x))
            .sum::<f64>()
            + self.bias
    }
}

/// Full solution of the dual, before support-vector filtering.
#[derive(Debug, Clone)]
pub struct DualSolution {
    pub dual_coefs: Vec<f64>,
    pub bias: f64,
    pub iterations: usize,
}

fn kernel_matrix(x: &[Vec<f64>], kernel: Kernel, gamma: f64) -> Vec<Vec<f64>> {
    let n = x.len();
    let mut k = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in i..n {
            let v = kernel.eval(gamma, &x[i], &x[j]);
            k[i][j] = v;
            k[j][i] = v;
        }
    }
    k
}

/// Solves the dual for a precomputed kernel matrix.
pub fn solve_dual(
    k: &[Vec<f64>],
    y: &[f64],
    c: f64,
    epsilon: f64,
    cfg: &SmoConfig,
) -> Result<DualSolution, RegressionError> {
    let n = y.len();
    let l = 2 * n;
    let sign = |t: usize| if t < n { 1.0 } else { -1.0 };
    let q = |t: usize, u: usize| sign(t) * sign(u) * k[t % n][u % n];

    let mut beta = vec![0.0; l];
    let mut grad: Vec<f64> = (0..l).map(|t| if t < n { epsilon - y[t] } else { epsilon + y[t - n] }).collect();
    let in_up = |t: usize, b: f64| if t < n { b < c } else { b > 0.0 };
    let in_low = |t: usize, b: f64| if t < n { b > 0.0 } else { b < c };

    let mut iterations = 0;
    loop {
        let mut g_max = f64::NEG_INFINITY;
        let mut g_min = f64::INFINITY;
        let (mut i, mut j) = (usize::MAX, usize::MAX);
        for t in 0..l {
            let v = -sign(t) * grad[t];
            if in_up(t, beta[t]) && v > g_max {
                g_max = v;
                i = t;
            }
            if in_low(t, beta[t]) && v < g_min {
                g_min = v;
                j = t;
            }
        }
        if i == usize::MAX || j == usize::MAX || g_max - g_min < cfg.tolerance {
            break;
        }
        if iterations >= cfg.max_iter {
            return Err(RegressionError::NotConverged { iterations, violation: g_max - g_min });
        }
        iterations += 1;

        let (old_i, old_j) = (beta[i], beta[j]);
        if sign(i) != sign(j) {
            let quad = (q(i, i) + q(j, j) + 2.0 * q(i, j)).max(TAU);
            let delta = (-grad[i] - grad[j]) / quad;
            let diff = beta[i] - beta[j];
            beta[i] += delta;
            beta[j] += delta;
            if diff > 0.0 {
                if beta[j] < 0.0 {
                    beta[j] = 0.0;
                    beta[i] = diff;
                }
            } else if beta[i] < 0.0 {
                beta[i] = 0.0;
                beta[j] = -diff;
            }
            if diff > 0.0 {
                if beta[i] > c {
                    beta[i] = c;
                    beta[j] = c - diff;
                }
            } else if beta[j] > c {
                beta[j] = c;
                beta[i] = c + diff;
            }
        } else {
            let quad = (q(i, i) + q(j, j) - 2.0 * q(i, j)).max(TAU);
            let delta = (grad[i] - grad[j]) / quad;
            let sum = beta[i] + beta[j];
            beta[i] -= delta;
            beta[j] += delta;
            if sum > c {
                if beta[i] > c {
                    beta[i] = c;
                    beta[j] = sum - c;
                }
            } else if beta[j] < 0.0 {
                beta[j] = 0.0;
                beta[i] = sum;
            }
            if sum > c {
                if beta[j] > c {
                    beta[j] = c;
                    beta[i] = sum - c;
                }
            } else if beta[i] < 0.0 {
                beta[i] = 0.0;
                beta[j] = sum;
            }
        }

        let (di, dj) = (beta[i] - old_i, beta[j] - old_j);
        for (t, g) in grad.iter_mut().enumerate() {
            *g += q(t, i) * di + q(t, j) * dj;
        }
    }

    // Offset: average over free variables, else midpoint of the feasible interval.
    let (mut ub, mut lb) = (f64::INFINITY, f64::NEG_INFINITY);
    let (mut free_sum, mut n_free) = (0.0, 0usize);
    for t in 0..l {
        let yg = sign(t) * grad[t];
        if beta[t] >= c {
            if sign(t) < 0.0 {
                ub = ub.min(yg);
            } else {
                lb = lb.max(yg);
            }
        } else if beta[t] <= 0.0 {
            if sign(t) > 0.0 {
                ub = ub.min(yg);
            } else {
                lb = lb.max(yg);
            }
        } else {
            free_sum += yg;
            n_free += 1;
        }
    }
    let rho = if n_free > 0 { free_sum / n_free as f64 } else { (ub + lb) / 2.0 };

    Ok(DualSolution {
        dual_coefs: (0..n).map(|i| beta[i] - beta[i + n]).collect(),
        bias: -rho,
        iterations,
    })
}

pub fn svr_fit(x: &[Vec<f64>], y: &[f64], p: &SvrParams) -> Result<SvrModel, RegressionError> {
    svr_fit_with(x, y, p, &SmoConfig::default())
}

pub fn svr_fit_with(x: &[Vec<f64>], y: &[f64], p: &SvrParams, cfg: &SmoConfig) -> Result<SvrModel, RegressionError> {
    check_rows(x)?;
    p.validate()?;
    if x.len() != y.len() {
        return Err(RegressionError::LengthMismatch { left: x.len(), right: y.len() });
    }
    if x.len() < 2 {
        return Err(RegressionError::TooFewSamples { needed: 2, got: x.len() });
    }
    if y.iter().any(|v| !v.is_finite()) {
        return Err(RegressionError::NonFinite);
    }
    let gamma = p.gamma.resolve(x);
    let k = kernel_matrix(x, p.kernel, gamma);
    let sol = solve_dual(&k, y, p.c, p.epsilon, cfg)?;

    let (mut support_vectors, mut dual_coefs) = (Vec::new(), Vec::new());
    for (row, &coef) in x.iter().zip(&sol.dual_coefs) {
        if coef.abs() > 1e-8 {
            support_vectors.push(row.clone());
            dual_coefs.push(coef);
        }
    }
    Ok(SvrModel {
        params: *p,
        gamma_value: gamma,
        support_vectors,
        dual_coefs,
        bias: sol.bias,
        iterations: sol.iterations,
    })
}

pub fn svr_predict(m: &SvrModel, x: &[Vec<f64>]) -> Result<Vec<f64>, RegressionError> {
    x.iter()
        .map(|r| match m.input_dim() {
            Some(d) if d != r.len() => Err(RegressionError::DimensionMismatch { expected: d, got: r.len() }),
            _ => Ok(m.predict_row(r)),
        })
        .collect()
}

/// Dual objective in maximization form for coefficients `d = alpha - alpha*`
/// (taking `alpha_i alpha*_i = 0`):
/// `-1/2 d' K d - eps sum |d| + y' d`.
pub fn dual_objective(k: &[Vec<f64>], y: &[f64], epsilon: f64, d: &[f64]) -> f64 {
    let quad: f64 = (0..d.len())
        .map(|i| (0..d.len()).map(|j| d[i] * d[j] * k[i][j]).sum::<f64>())
        .sum();
    -0.5 * quad - epsilon * d.iter().map(|v| v.abs()).sum::<f64>() + dot(y, d)
}

/// Kernel matrix for external checks (dual objective, KKT audits).
pub fn gram_matrix(x: &[Vec<f64>], kernel: Kernel, gamma: f64) -> Vec<Vec<f64>> {
    kernel_matrix(x, kernel, gamma)
}
