use std::collections::HashMap;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::metrics::mse;
use super::pca::{pca_fit, StandardScaler};
use super::svr::{svr_fit_with, Gamma, Kernel, SmoConfig, SvrParams};
use super::{check_rows, select_rows, RegressionError};

/// Hyperparameter grid. Defaults: C in {0.1, 1, 10, 100}, gamma in
/// {scale, 0.001, 0.01, 0.1, 1}, all three kernels, k in {8, 16, 24, 32, 48, 64}, eps 0.1.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridSpec {
    pub c: Vec<f64>,
    pub gamma: Vec<Gamma>,
    pub kernel: Vec<Kernel>,
    pub k_pca: Vec<usize>,
    pub epsilon: f64,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self {
            c: vec![0.1, 1.0, 10.0, 100.0],
            gamma: vec![Gamma::Scale, Gamma::Value(0.001), Gamma::Value(0.01), Gamma::Value(0.1), Gamma::Value(1.0)],
            kernel: vec![Kernel::Rbf, Kernel::Linear, Kernel::Poly],
            k_pca: vec![8, 16, 24, 32, 48, 64],
            epsilon: 0.1,
        }
    }
}

impl GridSpec {
    pub fn is_empty(&self) -> bool {
        self.c.is_empty() || self.gamma.is_empty() || self.kernel.is_empty() || self.k_pca.is_empty()
    }

    /// Cells in table order: k outer, then C, kernel, gamma.
    pub fn cells(&self) -> Vec<(usize, SvrParams)> {
        let mut out = Vec::new();
        for &k in &self.k_pca {
            for &c in &self.c {
                for &kernel in &self.kernel {
                    for &gamma in &self.gamma {
                        out.push((k, SvrParams { c, gamma, kernel, epsilon: self.epsilon }));
                    }
                }
            }
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CvOptions {
    pub folds: usize,
    pub seed: u64,
    pub smo: SmoConfig,
}

impl Default for CvOptions {
    fn default() -> Self {
        Self { folds: 5, seed: 0, smo: SmoConfig::default() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvCell {
    pub k_pca: usize,
    pub params: SvrParams,
    pub fold_mse: Vec<f64>,
    /// `None` when `k_pca` exceeds what a fold's training portion supports.
    pub mean_mse: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridSearchResult {
    pub best_params: SvrParams,
    pub best_k_pca: usize,
    pub best_mse: f64,
    pub table: Vec<CvCell>,
}

/// Rows handed to a scaler/PCA fit inside cross-validation, reported to an observer.
#[derive(Debug)]
pub struct FitAudit<'a> {
    pub fold: usize,
    pub fit_rows: &'a [usize],
    pub validation_rows: &'a [usize],
}

/// Validation index sets for `folds`-fold CV over a seeded permutation.
pub fn kfold_indices(n: usize, folds: usize, seed: u64) -> Vec<Vec<usize>> {
    let mut perm: Vec<usize> = (0..n).collect();
    perm.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let (base, extra) = (n / folds, n % folds);
    let mut out = Vec::with_capacity(folds);
    let mut start = 0;
    for f in 0..folds {
        let len = base + usize::from(f < extra);
        let mut fold = perm[start..start + len].to_vec();
        fold.sort_unstable();
        out.push(fold);
        start += len;
    }
    out
}

pub fn grid_search_cv(
    x: &[Vec<f64>],
    y: &[f64],
    grid: &GridSpec,
    opts: &CvOptions,
) -> Result<GridSearchResult, RegressionError> {
    grid_search_cv_observed(x, y, grid, opts, &|_| {})
}

/// Exhaustive grid search scored by mean validation MSE. The scaler and PCA
/// are refit on each fold's training rows; `observer` sees every such fit.
pub fn grid_search_cv_observed(
    x: &[Vec<f64>],
    y: &[f64],
    grid: &GridSpec,
    opts: &CvOptions,
    observer: &(dyn Fn(&FitAudit) + Sync),
) -> Result<GridSearchResult, RegressionError> {
    let d = check_rows(x)?;
    let n = x.len();
    if n != y.len() {
        return Err(RegressionError::LengthMismatch { left: n, right: y.len() });
    }
    if opts.folds < 2 {
        return Err(RegressionError::InvalidParams(format!("need at least 2 folds, got {}", opts.folds)));
    }
    if opts.folds > n {
        return Err(RegressionError::TooManyFolds { folds: opts.folds, n });
    }
    if grid.is_empty() {
        return Err(RegressionError::InvalidParams("empty grid".into()));
    }
    let cells = grid.cells();
    let folds = kfold_indices(n, opts.folds, opts.seed);

    // per fold: Some(mse) per cell, None when k is infeasible for that fold
    let per_fold: Vec<Vec<Option<f64>>> = folds
        .par_iter()
        .enumerate()
        .map(|(f, val_rows)| -> Result<Vec<Option<f64>>, RegressionError> {
            let fit_rows: Vec<usize> = (0..n).filter(|i| val_rows.binary_search(i).is_err()).collect();
            observer(&FitAudit { fold: f, fit_rows: &fit_rows, validation_rows: val_rows });

            let x_fit = select_rows(x, &fit_rows);
            let y_fit: Vec<f64> = fit_rows.iter().map(|&i| y[i]).collect();
            let x_val = select_rows(x, val_rows);
            let y_val: Vec<f64> = val_rows.iter().map(|&i| y[i]).collect();

            let scaler = StandardScaler::fit(&x_fit)?;
            let z_fit = scaler.transform(&x_fit)?;
            let z_val = scaler.transform(&x_val)?;
            let k_max = (fit_rows.len() - 1).min(d);
            let k_fit = grid.k_pca.iter().copied().filter(|&k| k >= 1 && k <= k_max).max();
            let Some(k_fit) = k_fit else {
                return Ok(vec![None; cells.len()]);
            };
            let pca = pca_fit(&z_fit, k_fit)?;
            let p_fit: Vec<Vec<f64>> = z_fit.iter().map(|r| pca.transform_row(r)).collect();
            let p_val: Vec<Vec<f64>> = z_val.iter().map(|r| pca.transform_row(r)).collect();

            let mut memo: HashMap<(usize, u64, Kernel, u64), f64> = HashMap::new();
            let mut out = Vec::with_capacity(cells.len());
            for (k, params) in &cells {
                let k = *k;
                if k == 0 || k > k_max {
                    out.push(None);
                    continue;
                }
                let tr: Vec<Vec<f64>> = p_fit.iter().map(|r| r[..k].to_vec()).collect();
                let gamma = match params.kernel {
                    Kernel::Linear => 0.0,
                    _ => params.gamma.resolve(&tr),
                };
                let key = (k, params.c.to_bits(), params.kernel, gamma.to_bits());
                if let Some(&m) = memo.get(&key) {
                    out.push(Some(m));
                    continue;
                }
                let model = svr_fit_with(&tr, &y_fit, params, &opts.smo)?;
                let preds: Vec<f64> = p_val.iter().map(|r| model.predict_row(&r[..k])).collect();
                let m = mse(&y_val, &preds)?;
                memo.insert(key, m);
                out.push(Some(m));
            }
            Ok(out)
        })
        .collect::<Result<_, _>>()?;

    let table: Vec<CvCell> = cells
        .iter()
        .enumerate()
        .map(|(ci, (k, params))| {
            let scores: Option<Vec<f64>> = per_fold.iter().map(|f| f[ci]).collect();
            let mean_mse = scores.as_ref().map(|s| s.iter().sum::<f64>() / s.len() as f64);
            CvCell { k_pca: *k, params: *params, fold_mse: scores.unwrap_or_default(), mean_mse }
        })
        .collect();

    let best = table
        .iter()
        .filter_map(|c| c.mean_mse.map(|m| (m, c)))
        .min_by(|(ma, a), (mb, b)| {
            ma.total_cmp(mb)
                .then(a.k_pca.cmp(&b.k_pca))
                .then(a.params.c.total_cmp(&b.params.c))
                .then(a.params.kernel.cmp(&b.params.kernel))
                .then({
                    let (ga, gb) = (a.params.gamma.rank_key(), b.params.gamma.rank_key());
                    ga.0.cmp(&gb.0).then(ga.1.total_cmp(&gb.1))
                })
        })
        .ok_or_else(|| {
            RegressionError::InvalidParams(format!("no k_pca in {:?} is feasible for {n} samples and {} folds", grid.k_pca, opts.folds))
        })?;
    let (best_mse, cell) = best;
    Ok(GridSearchResult { best_params: cell.params, best_k_pca: cell.k_pca, best_mse, table: table.clone() })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toy(n: usize) -> (Vec<Vec<f64>>, Vec<f64>) {
        let x: Vec<Vec<f64>> = (0..n).map(|i| vec![i as f64 / n as f64, ((i * 7) % 5) as f64, (i % 2) as f64]).collect();
        let y = x.iter().map(|r| 0.5 * r[0] - 0.1 * r[1]).collect();
        (x, y)
    }

    #[test]
    fn folds_partition_rows() {
        let f = kfold_indices(11, 3, 9);
        assert_eq!(f.iter().map(Vec::len).collect::<Vec<_>>(), vec![4, 4, 3]);
        let mut all: Vec<usize> = f.concat();
        all.sort_unstable();
        assert_eq!(all, (0..11).collect::<Vec<_>>());
    }

    #[test]
    fn single_cell_grid() {
        let (x, y) = toy(12);
        let grid = GridSpec { c: vec![1.0], gamma: vec![Gamma::Scale], kernel: vec![Kernel::Rbf], k_pca: vec![2], epsilon: 0.1 };
        let r = grid_search_cv(&x, &y, &grid, &CvOptions { folds: 3, ..Default::default() }).unwrap();
        assert_eq!(r.table.len(), 1);
        assert_eq!(r.best_k_pca, 2);
        assert_eq!(r.best_params, grid.cells()[0].1);
    }

    #[test]
    fn fold_count_errors() {
        let (x, y) = toy(4);
        let grid = GridSpec { k_pca: vec![1], ..Default::default() };
        assert!(matches!(
            grid_search_cv(&x, &y, &grid, &CvOptions { folds: 5, ..Default::default() }),
            Err(RegressionError::TooManyFolds { folds: 5, n: 4 })
        ));
        assert!(grid_search_cv(&x, &y, &grid, &CvOptions { folds: 1, ..Default::default() }).is_err());
    }

    #[test]
    fn infeasible_k_is_marked() {
        let (x, y) = toy(10);
        let grid = GridSpec { c: vec![1.0], gamma: vec![Gamma::Scale], kernel: vec![Kernel::Linear], k_pca: vec![2, 50], epsilon: 0.1 };
        let r = grid_search_cv(&x, &y, &grid, &CvOptions { folds: 2, ..Default::default() }).unwrap();
        assert!(r.table[0].mean_mse.is_some());
        assert!(r.table[1].mean_mse.is_none());
        assert_eq!(r.best_k_pca, 2);
    }

    #[test]
    fn deterministic_table() {
        let (x, y) = toy(15);
        let grid = GridSpec { k_pca: vec![1, 2], c: vec![0.1, 10.0], ..Default::default() };
        let opts = CvOptions { folds: 3, seed: 4, ..Default::default() };
        let a = serde_json::to_string(&grid_search_cv(&x, &y, &grid, &opts).unwrap()).unwrap();
        let b = serde_json::to_string(&grid_search_cv(&x, &y, &grid, &opts).unwrap()).unwrap();
        assert_eq!(a, b);
    }
}
