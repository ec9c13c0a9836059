use serde::{Deserialize, Serialize};

use super::grid::{grid_search_cv, CvOptions, GridSearchResult, GridSpec};
use super::pca::{pca_fit, PcaModel, StandardScaler};
use super::svr::{svr_fit_with, SmoConfig, SvrModel, SvrParams};
use super::{check_rows, RegressionError};

pub const MODEL_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub grid: GridSpec,
    pub folds: usize,
    pub smo: SmoConfig,
    /// Re-run the grid search inside every evaluation trial. When false the
    /// first trial's selection is reused for the rest.
    pub research_per_trial: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self { grid: GridSpec::default(), folds: 5, smo: SmoConfig::default(), research_per_trial: true }
    }
}

impl TrainConfig {
    pub(crate) fn cv_options(&self, seed: u64) -> CvOptions {
        CvOptions { folds: self.folds, seed, smo: self.smo }
    }
}

/// One affect dimension's regressor, fed by the leading `n_components`
/// principal components of the shared projection.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AffectRegressor {
    pub n_components: usize,
    pub svr: SvrModel,
}

impl AffectRegressor {
    fn predict(&self, projected: &[f64]) -> f64 {
        self.svr.predict_row(&projected[..self.n_components])
    }
}

/// Trained soundscape affect model: standardization, PCA and one SVR per dimension.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SerModel {
    pub format_version: u32,
    pub config: TrainConfig,
    pub scaler: StandardScaler,
    pub pca: PcaModel,
    pub svr_valence: AffectRegressor,
    pub svr_arousal: AffectRegressor,
}

/// Raw per-clip model output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AffectPrediction {
    pub clip_id: String,
    pub valence: f64,
    pub arousal: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainSummary {
    pub valence: GridSearchResult,
    pub arousal: GridSearchResult,
}

impl SerModel {
    /// Fits with fixed hyperparameters. The PCA keeps enough components for
    /// both dimensions; each SVR reads its own prefix.
    pub fn fit_selected(
        x: &[Vec<f64>],
        valence: &[f64],
        arousal: &[f64],
        sel_valence: (SvrParams, usize),
        sel_arousal: (SvrParams, usize),
        config: &TrainConfig,
    ) -> Result<SerModel, RegressionError> {
        check_rows(x)?;
        let scaler = StandardScaler::fit(x)?;
        let z = scaler.transform(x)?;
        let k = sel_valence.1.max(sel_arousal.1);
        let pca = pca_fit(&z, k)?;
        let projected: Vec<Vec<f64>> = z.iter().map(|r| pca.transform_row(r)).collect();
        let fit = |(params, k): (SvrParams, usize), y: &[f64]| -> Result<AffectRegressor, RegressionError> {
            let rows: Vec<Vec<f64>> = projected.iter().map(|r| r[..k].to_vec()).collect();
            Ok(AffectRegressor { n_components: k, svr: svr_fit_with(&rows, y, &params, &config.smo)? })
        };
        Ok(SerModel {
            format_version: MODEL_FORMAT_VERSION,
            config: config.clone(),
            scaler,
            pca,
            svr_valence: fit(sel_valence, valence)?,
            svr_arousal: fit(sel_arousal, arousal)?,
        })
    }

    /// Raw `(valence, arousal)`; callers clamp if they need the unit square.
    pub fn predict_row(&self, features: &[f64]) -> Result<(f64, f64), RegressionError> {
        if features.len() != self.scaler.dim() {
            return Err(RegressionError::DimensionMismatch { expected: self.scaler.dim(), got: features.len() });
        }
        let projected = self.pca.transform_row(&self.scaler.transform_row(features));
        Ok((self.svr_valence.predict(&projected), self.svr_arousal.predict(&projected)))
    }

    pub fn predict(&self, x: &[Vec<f64>]) -> Result<Vec<(f64, f64)>, RegressionError> {
        x.iter().map(|r| self.predict_row(r)).collect()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("model serializes")
    }

    pub fn from_json(text: &str) -> Result<SerModel, RegressionError> {
        let m: SerModel = serde_json::from_str(text).map_err(|e| RegressionError::InvalidParams(format!("model file: {e}")))?;
        if m.format_version != MODEL_FORMAT_VERSION {
            return Err(RegressionError::InvalidParams(format!("unsupported model format_version {}", m.format_version)));
        }
        Ok(m)
    }
}

/// Grid-searches each dimension independently, then refits on all rows.
pub fn fit_ser(
    x: &[Vec<f64>],
    valence: &[f64],
    arousal: &[f64],
    config: &TrainConfig,
    seed: u64,
) -> Result<(SerModel, TrainSummary), RegressionError> {
    let opts = config.cv_options(seed);
    let gv = grid_search_cv(x, valence, &config.grid, &opts)?;
    let ga = grid_search_cv(x, arousal, &config.grid, &opts)?;
    let model = SerModel::fit_selected(
        x,
        valence,
        arousal,
        (gv.best_params, gv.best_k_pca),
        (ga.best_params, ga.best_k_pca),
        config,
    )?;
    Ok((model, TrainSummary { valence: gv, arousal: ga }))
}
