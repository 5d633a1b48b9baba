use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::grid::reconstructed_rmse;
use crate::error::{Error, Result};
use crate::features::FeatureMatrix;
use crate::models::{ModelKind, TrainedModel};
use crate::rng::{label_id, shuffle, unit_rng};

pub const MIN_IMPORTANCE_ROWS: usize = 10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureImportance {
    pub feature: String,
    /// Mean increase in reconstructed-TT RMSE over the shuffles.
    pub delta_rmse: f64,
}

/// Shuffles each column of `holdout` `repeats` times and records the mean
/// RMSE increase, sorted descending (ties keep column order).
///
/// Shuffle `r` of feature `name` is keyed by `(seed, name, r)`. Columns no
/// tree splits on cannot change a GBT forecast and get exactly zero without
/// being evaluated.
pub fn permutation_importance(
    model: &TrainedModel,
    holdout: &FeatureMatrix,
    repeats: usize,
    seed: u64,
) -> Result<Vec<FeatureImportance>> {
    if holdout.n_rows() < MIN_IMPORTANCE_ROWS {
        return Err(Error::InsufficientHistory(format!(
            "permutation importance needs at least {MIN_IMPORTANCE_ROWS} rows, got {}",
            holdout.n_rows()
        )));
    }
    if repeats == 0 {
        return Err(Error::InvalidArgument("importance repeats must be positive".into()));
    }
    let reference = reconstructed_rmse(model, holdout)?;
    let used = match model.kind {
        ModelKind::Gbt => model.used_features(),
        _ => vec![true; holdout.n_features()],
    };
    let deltas: Vec<f64> = (0..holdout.n_features())
        .into_par_iter()
        .map(|j| {
            if !used.get(j).copied().unwrap_or(true) {
                return Ok(0.0);
            }
            let name = &holdout.feature_names[j];
            let original = holdout.column(j);
            let mut shuffled = holdout.clone();
            let mut total = 0.0;
            for r in 0..repeats {
                let mut col = original.clone();
                shuffle(&mut unit_rng(seed, &[label_id(name), r as u64]), &mut col);
                shuffled.set_column(j, &col);
                total += reconstructed_rmse(model, &shuffled)? - reference;
            }
            Ok(total / repeats as f64)
        })
        .collect::<Result<_>>()?;
    let mut table: Vec<FeatureImportance> = holdout
        .feature_names
        .iter()
        .zip(deltas)
        .map(|(f, d)| FeatureImportance {
            feature: f.clone(),
            delta_rmse: d,
        })
        .collect();
    table.sort_by(|a, b| b.delta_rmse.total_cmp(&a.delta_rmse));
    Ok(table)
}

pub fn write_importance_csv<W: Write>(table: &[FeatureImportance], sink: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(sink);
    w.write_record(["rank", "feature", "delta_rmse"])?;
    for (i, row) in table.iter().enumerate() {
        w.write_record([(i + 1).to_string(), row.feature.clone(), row.delta_rmse.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_importance_csv<R: std::io::Read>(source: R) -> Result<Vec<FeatureImportance>> {
    let mut r = csv::Reader::from_reader(source);
    let mut out = Vec::new();
    for rec in r.records() {
        let rec = rec?;
        let delta = rec
            .get(2)
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| Error::ModelFormat(format!("bad importance row {rec:?}")))?;
        out.push(FeatureImportance {
            feature: rec.get(1).unwrap_or_default().to_string(),
            delta_rmse: delta,
        });
    }
    Ok(out)
}
