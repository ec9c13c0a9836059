use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::grid::grid_search_cv;
use super::labels::AffectLabel;
use super::metrics::{mse, r2};
use super::model::{SerModel, TrainConfig};
use super::svr::SvrParams;
use super::{select_rows, RegressionError};
use crate::dsp::FeatureVector;

const MIN_TRIAL_CLIPS: usize = 10;

/// Deterministic per-unit seed so parallel units never share an RNG stream.
pub fn derive_seed(base: u64, index: u64) -> u64 {
    fn mix(mut z: u64) -> u64 {
        z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }
    mix(base ^ mix(index))
}

/// Features joined with labels, ordered by clip id.
#[derive(Debug, Clone, PartialEq)]
pub struct AffectDataset {
    pub clip_ids: Vec<String>,
    pub features: Vec<Vec<f64>>,
    pub valence: Vec<f64>,
    pub arousal: Vec<f64>,
}

impl AffectDataset {
    /// Inner join on clip id; unmatched entries on either side are dropped.
    pub fn join(features: &[FeatureVector], labels: &[AffectLabel]) -> Result<AffectDataset, RegressionError> {
        let mut by_id: BTreeMap<&str, &AffectLabel> = BTreeMap::new();
        for l in labels {
            if by_id.insert(l.clip_id.as_str(), l).is_some() {
                return Err(RegressionError::InvalidParams(format!("duplicate label for clip {}", l.clip_id)));
            }
        }
        let mut rows: Vec<(&FeatureVector, &AffectLabel)> =
            features.iter().filter_map(|f| by_id.get(f.clip_id.as_str()).map(|l| (f, *l))).collect();
        rows.sort_by(|a, b| a.0.clip_id.cmp(&b.0.clip_id));
        if rows.windows(2).any(|w| w[0].0.clip_id == w[1].0.clip_id) {
            return Err(RegressionError::InvalidParams("duplicate clip id in features".into()));
        }
        let dropped = features.len() + labels.len() - 2 * rows.len();
        if dropped > 0 {
            log::warn!("{dropped} feature/label entries had no counterpart and were dropped");
        }
        Ok(AffectDataset {
            clip_ids: rows.iter().map(|r| r.0.clip_id.clone()).collect(),
            features: rows.iter().map(|r| r.0.values.clone()).collect(),
            valence: rows.iter().map(|r| r.1.valence).collect(),
            arousal: rows.iter().map(|r| r.1.arousal).collect(),
        })
    }

    pub fn len(&self) -> usize {
        self.clip_ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.clip_ids.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrialReport {
    pub seed: u64,
    pub r2_valence: f64,
    pub mse_valence: f64,
    pub r2_arousal: f64,
    pub mse_arousal: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FieldStats {
    pub mean: f64,
    /// Population standard deviation over trials.
    pub sd: f64,
}

impl FieldStats {
    fn of(values: impl Iterator<Item = f64> + Clone) -> FieldStats {
        let n = values.clone().count() as f64;
        let mean = values.clone().sum::<f64>() / n;
        let sd = (values.map(|v| (v - mean).powi(2)).sum::<f64>() / n).sqrt();
        FieldStats { mean, sd }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialSummary {
    pub n_trials: usize,
    pub base_seed: u64,
    pub r2_valence: FieldStats,
    pub mse_valence: FieldStats,
    pub r2_arousal: FieldStats,
    pub mse_arousal: FieldStats,
    pub trials: Vec<TrialReport>,
}

impl TrialSummary {
    pub fn from_trials(base_seed: u64, trials: Vec<TrialReport>) -> TrialSummary {
        let it = trials.iter();
        TrialSummary {
            n_trials: trials.len(),
            base_seed,
            r2_valence: FieldStats::of(it.clone().map(|t| t.r2_valence)),
            mse_valence: FieldStats::of(it.clone().map(|t| t.mse_valence)),
            r2_arousal: FieldStats::of(it.clone().map(|t| t.r2_arousal)),
            mse_arousal: FieldStats::of(it.clone().map(|t| t.mse_arousal)),
            trials,
        }
    }

    /// Text table laid out as affect dimension x (R2 mean/sd, MSE mean/sd).
    pub fn table(&self) -> String {
        let mut s = String::new();
        s.push_str(&format!("{:<16}| {:^15} | {:^15}\n", "Affect Dimension", "R2", "MSE"));
        s.push_str(&format!("{:<16}| {:>7} {:>7} | {:>7} {:>7}\n", "", "Mean", "SD", "Mean", "SD"));
        for (name, r, m) in [("Valence", self.r2_valence, self.mse_valence), ("Arousal", self.r2_arousal, self.mse_arousal)] {
            s.push_str(&format!("{:<16}| {:>7.3} {:>7.3} | {:>7.3} {:>7.3}\n", name, r.mean, r.sd, m.mean, m.sd));
        }
        s
    }
}

type Selections = ((SvrParams, usize), (SvrParams, usize));

fn trial_inner(
    ds: &AffectDataset,
    config: &TrainConfig,
    seed: u64,
    fixed: Option<Selections>,
) -> Result<(TrialReport, Selections), RegressionError> {
    let n = ds.len();
    if n < MIN_TRIAL_CLIPS {
        return Err(RegressionError::TooFewSamples { needed: MIN_TRIAL_CLIPS, got: n });
    }
    let mut perm: Vec<usize> = (0..n).collect();
    perm.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let n_train = n * 8 / 10;
    let (train, test) = perm.split_at(n_train);

    let x_train = select_rows(&ds.features, train);
    let x_test = select_rows(&ds.features, test);
    let pick = |y: &[f64], idx: &[usize]| idx.iter().map(|&i| y[i]).collect::<Vec<f64>>();
    let (v_train, a_train) = (pick(&ds.valence, train), pick(&ds.arousal, train));
    let (v_test, a_test) = (pick(&ds.valence, test), pick(&ds.arousal, test));

    let selections = match fixed {
        Some(s) => s,
        None => {
            let opts = config.cv_options(derive_seed(seed, 1));
            let gv = grid_search_cv(&x_train, &v_train, &config.grid, &opts)?;
            let ga = grid_search_cv(&x_train, &a_train, &config.grid, &opts)?;
            ((gv.best_params, gv.best_k_pca), (ga.best_params, ga.best_k_pca))
        }
    };
    let model = SerModel::fit_selected(&x_train, &v_train, &a_train, selections.0, selections.1, config)?;
    let preds = model.predict(&x_test)?;
    let pv: Vec<f64> = preds.iter().map(|p| p.0).collect();
    let pa: Vec<f64> = preds.iter().map(|p| p.1).collect();
    let report = TrialReport {
        seed,
        r2_valence: r2(&v_test, &pv)?,
        mse_valence: mse(&v_test, &pv)?,
        r2_arousal: r2(&a_test, &pa)?,
        mse_arousal: mse(&a_test, &pa)?,
    };
    Ok((report, selections))
}

/// One shuffled 80:20 split: grid search on the training part, refit, score on the held-out part.
pub fn run_trial(ds: &AffectDataset, config: &TrainConfig, seed: u64) -> Result<TrialReport, RegressionError> {
    trial_inner(ds, config, seed, None).map(|r| r.0)
}

/// Repeats [`run_trial`] with seeds derived from `base_seed` and aggregates.
pub fn evaluate_trials(
    ds: &AffectDataset,
    n_trials: usize,
    base_seed: u64,
    config: &TrainConfig,
) -> Result<TrialSummary, RegressionError> {
    if n_trials == 0 {
        return Err(RegressionError::InvalidParams("n_trials must be at least 1".into()));
    }
    let seeds: Vec<u64> = (0..n_trials as u64).map(|i| derive_seed(base_seed, i)).collect();
    let trials: Vec<TrialReport> = if config.research_per_trial {
        seeds.par_iter().map(|&s| run_trial(ds, config, s)).collect::<Result<_, _>>()?
    } else {
        let (first, sel) = trial_inner(ds, config, seeds[0], None)?;
        let rest: Vec<TrialReport> = seeds[1..]
            .par_iter()
            .map(|&s| trial_inner(ds, config, s, Some(sel)).map(|r| r.0))
            .collect::<Result<_, _>>()?;
        std::iter::once(first).chain(rest).collect()
    };
    Ok(TrialSummary::from_trials(base_seed, trials))
}
