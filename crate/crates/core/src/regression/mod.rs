//! Valence/arousal regression: standardization, PCA and epsilon-SVR, with
//! grid-searched hyperparameters and a repeated shuffled-split evaluation.

mod grid;
mod labels;
mod metrics;
mod model;
mod pca;
mod svr;
mod trial;

pub use grid::{grid_search_cv, grid_search_cv_observed, kfold_indices, CvCell, CvOptions, FitAudit, GridSearchResult, GridSpec};
pub use labels::{parse_labels_csv, read_labels_csv, AffectLabel};
pub use metrics::{mse, r2};
pub use model::{fit_ser, AffectPrediction, AffectRegressor, SerModel, TrainConfig, TrainSummary, MODEL_FORMAT_VERSION};
pub use pca::{pca_fit, pca_transform, PcaModel, StandardScaler};
pub use svr::{
    dual_objective, gram_matrix, solve_dual, svr_fit, svr_fit_with, svr_predict, DualSolution, Gamma, Kernel, SmoConfig,
    SvrModel, SvrParams,
};
pub use trial::{derive_seed, evaluate_trials, run_trial, AffectDataset, FieldStats, TrialReport, TrialSummary};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum RegressionError {
    #[error("dimension mismatch: expected {expected} columns, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },
    #[error("need at least {needed} samples, got {got}")]
    TooFewSamples { needed: usize, got: usize },
    #[error("number of components {k} outside 1..={max}")]
    ComponentsOutOfRange { k: usize, max: usize },
    #[error("{folds} folds requested for {n} samples")]
    TooManyFolds { folds: usize, n: usize },
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("input contains non-finite values")]
    NonFinite,
    #[error("SMO did not converge after {iterations} iterations (violation {violation:.3e})")]
    NotConverged { iterations: usize, violation: f64 },
    #[error("label {clip_id}: {dimension} = {value} outside [-1, 1]")]
    LabelOutOfRange { clip_id: String, dimension: &'static str, value: f64 },
    #[error("{path}:{line}: {message}")]
    Labels { path: String, line: usize, message: String },
    #[error("{0}")]
    Io(#[from] std::io::Error),
}

/// Checks a row matrix is non-empty, rectangular and finite; returns its width.
pub(crate) fn check_rows(x: &[Vec<f64>]) -> Result<usize, RegressionError> {
    let Some(first) = x.first() else {
        return Err(RegressionError::TooFewSamples { needed: 1, got: 0 });
    };
    let d = first.len();
    for r in x {
        if r.len() != d {
            return Err(RegressionError::DimensionMismatch { expected: d, got: r.len() });
        }
        if r.iter().any(|v| !v.is_finite()) {
            return Err(RegressionError::NonFinite);
        }
    }
    Ok(d)
}

pub(crate) fn select_rows(x: &[Vec<f64>], idx: &[usize]) -> Vec<Vec<f64>> {
    idx.iter().map(|&i| x[i].clone()).collect()
}
