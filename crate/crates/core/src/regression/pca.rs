use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use super::{check_rows, RegressionError};

/// Per-dimension standardization (population std; constant columns keep scale 1).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StandardScaler {
    pub mean: Vec<f64>,
    pub scale: Vec<f64>,
}

impl StandardScaler {
    pub fn fit(x: &[Vec<f64>]) -> Result<Self, RegressionError> {
        let d = check_rows(x)?;
        let n = x.len() as f64;
        let mean: Vec<f64> = (0..d).map(|j| x.iter().map(|r| r[j]).sum::<f64>() / n).collect();
        let scale = (0..d)
            .map(|j| {
                let var = x.iter().map(|r| (r[j] - mean[j]).powi(2)).sum::<f64>() / n;
                let sd = var.sqrt();
                if sd > 1e-12 {
                    sd
                } else {
                    1.0
                }
            })
            .collect();
        Ok(Self { mean, scale })
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn transform_row(&self, row: &[f64]) -> Vec<f64> {
        row.iter().zip(&self.mean).zip(&self.scale).map(|((x, m), s)| (x - m) / s).collect()
    }

    pub fn transform(&self, x: &[Vec<f64>]) -> Result<Vec<Vec<f64>>, RegressionError> {
        for r in x {
            if r.len() != self.dim() {
                return Err(RegressionError::DimensionMismatch { expected: self.dim(), got: r.len() });
            }
        }
        Ok(x.iter().map(|r| self.transform_row(r)).collect())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PcaModel {
    pub mean: Vec<f64>,
    /// `k` rows, orthonormal, ordered by descending explained variance.
    pub components: Vec<Vec<f64>>,
    pub explained_variance: Vec<f64>,
}

impl PcaModel {
    pub fn n_components(&self) -> usize {
        self.components.len()
    }

    pub fn input_dim(&self) -> usize {
        self.mean.len()
    }

    /// Keeps the leading `k` components.
    pub fn truncated(&self, k: usize) -> PcaModel {
        let k = k.min(self.n_components());
        PcaModel {
            mean: self.mean.clone(),
            components: self.components[..k].to_vec(),
            explained_variance: self.explained_variance[..k].to_vec(),
        }
    }

    pub fn transform_row(&self, row: &[f64]) -> Vec<f64> {
        self.components
            .iter()
            .map(|c| c.iter().zip(row).zip(&self.mean).map(|((w, x), m)| w * (x - m)).sum())
            .collect()
    }

    pub fn inverse_transform_row(&self, z: &[f64]) -> Vec<f64> {
        let mut out = self.mean.clone();
        for (c, zk) in self.components.iter().zip(z) {
            for (o, w) in out.iter_mut().zip(c) {
                *o += zk * w;
            }
        }
        out
    }
}

/// Top-`k` principal axes of the sample covariance (denominator `n - 1`).
///
/// Each component's largest-magnitude entry is made positive.
pub fn pca_fit(x: &[Vec<f64>], k: usize) -> Result<PcaModel, RegressionError> {
    let d = check_rows(x)?;
    let n = x.len();
    if n < 2 {
        return Err(RegressionError::TooFewSamples { needed: 2, got: n });
    }
    let max_k = (n - 1).min(d);
    if k == 0 || k > max_k {
        return Err(RegressionError::ComponentsOutOfRange { k, max: max_k });
    }
    let mean: Vec<f64> = (0..d).map(|j| x.iter().map(|r| r[j]).sum::<f64>() / n as f64).collect();
    let centered = DMatrix::from_fn(n, d, |i, j| x[i][j] - mean[j]);
    let cov = (centered.transpose() * &centered) / (n as f64 - 1.0);
    let eig = SymmetricEigen::new(cov);

    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]).then(a.cmp(&b)));

    let mut components = Vec::with_capacity(k);
    let mut explained_variance = Vec::with_capacity(k);
    for &idx in order.iter().take(k) {
        let mut v: Vec<f64> = eig.eigenvectors.column(idx).iter().copied().collect();
        let pivot = v
            .iter()
            .enumerate()
            .fold(0, |best, (i, x)| if x.abs() > v[best].abs() { i } else { best });
        if v[pivot] < 0.0 {
            v.iter_mut().for_each(|x| *x = -*x);
        }
        components.push(v);
        explained_variance.push(eig.eigenvalues[idx].max(0.0));
    }
    Ok(PcaModel { mean, components, explained_variance })
}

pub fn pca_transform(m: &PcaModel, x: &[Vec<f64>]) -> Result<Vec<Vec<f64>>, RegressionError> {
    x.iter()
        .map(|r| {
            if r.len() != m.input_dim() {
                Err(RegressionError::DimensionMismatch { expected: m.input_dim(), got: r.len() })
            } else {
                Ok(m.transform_row(r))
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn line_data_has_diagonal_component() {
        let ts = [-2.0, -1.0, 0.5, 1.0, 3.0];
        let x: Vec<Vec<f64>> = ts.iter().map(|&t| {
            let mut r = vec![0.0; 5];
            r[0] = t;
            r[1] = t;
            r
        }).collect();
        let m = pca_fit(&x, 1).unwrap();
        let h = 1.0 / 2f64.sqrt();
        assert!((m.components[0][0] - h).abs() < 1e-10 && (m.components[0][1] - h).abs() < 1e-10);
        // projection onto the unit diagonal is t * sqrt(2)
        let proj: Vec<f64> = ts.iter().map(|t| t * 2f64.sqrt()).collect();
        let mp = proj.iter().sum::<f64>() / 5.0;
        let var = proj.iter().map(|p| (p - mp).powi(2)).sum::<f64>() / 4.0;
        assert!((m.explained_variance[0] - var).abs() < 1e-10);
    }

    #[test]
    fn mean_row_maps_to_origin() {
        let x = vec![vec![1.0, 2.0, 0.0], vec![3.0, -1.0, 1.0], vec![0.0, 0.0, 5.0], vec![2.0, 2.0, 2.0]];
        let m = pca_fit(&x, 2).unwrap();
        let z = m.transform_row(&m.mean.clone());
        assert!(z.iter().all(|v| v.abs() < 1e-12));
    }

    #[test]
    fn rejects_bad_k() {
        let x = vec![vec![1.0, 2.0], vec![3.0, 4.0], vec![0.0, 1.0]];
        assert!(matches!(pca_fit(&x, 0), Err(RegressionError::ComponentsOutOfRange { .. })));
        assert!(matches!(pca_fit(&x, 3), Err(RegressionError::ComponentsOutOfRange { max: 2, .. })));
        assert!(pca_fit(&x, 2).is_ok());
    }

    #[test]
    fn transform_checks_dimension() {
        let x = vec![vec![1.0, 2.0], vec![3.0, 4.0], vec![0.0, 1.0]];
        let m = pca_fit(&x, 1).unwrap();
        assert!(pca_transform(&m, &[vec![1.0]]).is_err());
    }

    #[test]
    fn scaler_standardizes() {
        let x = vec![vec![1.0, 5.0], vec![3.0, 5.0]];
        let s = StandardScaler::fit(&x).unwrap();
        assert_eq!(s.transform_row(&[1.0, 5.0]), vec![-1.0, 0.0]);
        assert_eq!(s.scale, vec![1.0, 1.0]);
    }
}
