//! Hyperparameter selection by expanding-window CV on reconstructed TT.

use std::cmp::Ordering;
use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::metrics::rmse;
use super::split::FoldPlan;
use crate::error::{Error, Result};
use crate::features::{reconstruct, FeatureMatrix};
use crate::models::{fit_gbt, GbtParams, TrainedModel};

const N_ESTIMATORS: [usize; 3] = [1000, 1500, 3000];
const LEARNING_RATES: [f64; 3] = [0.05, 0.1, 0.2];
const MAX_DEPTHS: [usize; 3] = [5, 6, 7];
const FEATURE_FRACTIONS: [f64; 3] = [0.6, 0.8, 0.9];
const BAGGING_FRACTIONS: [f64; 4] = [0.6, 0.8, 0.9, 1.0];

fn params(n: usize, lr: f64, depth: usize, ff: f64, bf: f64) -> GbtParams {
    GbtParams {
        n_estimators: n,
        learning_rate: lr,
        max_depth: depth,
        feature_fraction: ff,
        bagging_fraction: bf,
        ..GbtParams::default()
    }
}

/// The four distinct tree configurations reported as final choices.
pub fn default_grid() -> Vec<GbtParams> {
    vec![
        params(1000, 0.1, 5, 0.9, 0.9),
        params(3000, 0.1, 6, 0.9, 0.9),
        params(1500, 0.05, 5, 0.9, 0.9),
        params(1500, 0.2, 7, 0.6, 0.8),
    ]
}

/// Full Cartesian product of the tuned value sets (324 candidates).
pub fn full_grid() -> Vec<GbtParams> {
    let mut grid = Vec::with_capacity(324);
    for n in N_ESTIMATORS {
        for lr in LEARNING_RATES {
            for depth in MAX_DEPTHS {
                for ff in FEATURE_FRACTIONS {
                    for bf in BAGGING_FRACTIONS {
                        grid.push(params(n, lr, depth, ff, bf));
                    }
                }
            }
        }
    }
    grid
}

/// RMSE of reconstructed next-day TT for `model` on `rows`.
pub fn reconstructed_rmse(model: &TrainedModel, rows: &FeatureMatrix) -> Result<f64> {
    let delta = model.predict(rows)?;
    let tt = reconstruct(&rows.base, &delta)?;
    rmse(&rows.actual_next, &tt.values)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CandidateResult {
    pub index: usize,
    pub params: GbtParams,
    /// One entry per fold; `None` where the fit failed.
    pub fold_rmse: Vec<Option<f64>>,
    pub mean_rmse: Option<f64>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridResult {
    pub best_index: usize,
    pub best: GbtParams,
    pub candidates: Vec<CandidateResult>,
}

/// Lower score wins; ties go to fewer estimators, shallower trees, a lower
/// learning rate, then the earlier candidate.
fn rank(a: &CandidateResult, b: &CandidateResult) -> Ordering {
    let (sa, sb) = (a.mean_rmse.unwrap(), b.mean_rmse.unwrap());
    sa.total_cmp(&sb)
        .then(a.params.n_estimators.cmp(&b.params.n_estimators))
        .then(a.params.max_depth.cmp(&b.params.max_depth))
        .then(a.params.learning_rate.total_cmp(&b.params.learning_rate))
        .then(a.index.cmp(&b.index))
}

/// Scores every candidate on every fold of `train` and picks the winner.
/// Refitting the winner on all training rows is left to the caller.
pub fn grid_search(train: &FeatureMatrix, grid: &[GbtParams], folds: &FoldPlan) -> Result<GridResult> {
    if grid.is_empty() {
        return Err(Error::InvalidArgument("hyperparameter grid is empty".into()));
    }
    if folds.is_empty() {
        return Err(Error::InvalidArgument("fold plan is empty".into()));
    }
    let units: Vec<(usize, usize)> = (0..grid.len())
        .flat_map(|c| (0..folds.len()).map(move |f| (c, f)))
        .collect();
    let scores: Vec<Result<f64>> = units
        .par_iter()
        .map(|&(c, f)| {
            let fold = &folds.folds[f];
            let model = fit_gbt(&train.slice_rows(fold.train.clone()), &grid[c])?;
            reconstructed_rmse(&model, &train.slice_rows(fold.validation.clone()))
        })
        .collect();

    let mut candidates = Vec::with_capacity(grid.len());
    for (c, params) in grid.iter().enumerate() {
        let mut fold_rmse = Vec::with_capacity(folds.len());
        let mut error = None;
        for (f, score) in scores[c * folds.len()..(c + 1) * folds.len()].iter().enumerate() {
            match score {
                Ok(v) => fold_rmse.push(Some(*v)),
                Err(e) => {
                    fold_rmse.push(None);
                    error.get_or_insert_with(|| format!("fold {}: {e}", f + 1));
                }
            }
        }
        let mean_rmse = if error.is_none() {
            Some(fold_rmse.iter().flatten().sum::<f64>() / folds.len() as f64)
        } else {
            log::warn!("grid candidate {c} disqualified: {}", error.as_deref().unwrap_or(""));
            None
        };
        candidates.push(CandidateResult {
            index: c,
            params: *params,
            fold_rmse,
            mean_rmse,
            error,
        });
    }
    let best = candidates
        .iter()
        .filter(|c| c.mean_rmse.is_some())
        .min_by(|a, b| rank(a, b))
        .ok_or_else(|| {
            Error::InvalidArgument(format!(
                "every grid candidate failed; first: {}",
                candidates[0].error.as_deref().unwrap_or("unknown")
            ))
        })?;
    Ok(GridResult {
        best_index: best.index,
        best: best.params,
        candidates,
    })
}

/// Per-candidate fold scores as CSV; failed folds are empty cells.
pub fn write_cv_table<W: Write>(results: &[(&str, &GridResult)], sink: W) -> Result<()> {
    let n_folds = results
        .iter()
        .flat_map(|(_, r)| r.candidates.iter().map(|c| c.fold_rmse.len()))
        .max()
        .unwrap_or(0);
    let mut w = csv::Writer::from_writer(sink);
    let mut header: Vec<String> = [
        "feature_set",
        "candidate",
        "n_estimators",
        "learning_rate",
        "max_depth",
        "feature_fraction",
        "bagging_fraction",
    ]
    .iter()
    .map(|s| s.to_string())
    .collect();
    header.extend((1..=n_folds).map(|f| format!("fold_{f}_rmse")));
    header.extend(["mean_rmse".into(), "selected".into(), "error".into()]);
    w.write_record(&header)?;
    let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
    for (set, result) in results {
        for c in &result.candidates {
            let mut rec = vec![
                set.to_string(),
                c.index.to_string(),
                c.params.n_estimators.to_string(),
                c.params.learning_rate.to_string(),
                c.params.max_depth.to_string(),
                c.params.feature_fraction.to_string(),
                c.params.bagging_fraction.to_string(),
            ];
            rec.extend((0..n_folds).map(|f| opt(c.fold_rmse.get(f).copied().flatten())));
            rec.push(opt(c.mean_rmse));
            rec.push((c.index == result.best_index).to_string());
            rec.push(c.error.clone().unwrap_or_default());
            w.write_record(&rec)?;
        }
    }
    w.flush()?;
    Ok(())
}
