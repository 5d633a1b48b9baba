//! One-step ΔTT forecasters: random walk, AR on differences, boosted trees.
//!
//! Every model predicts the change from the origin day's TT (in hours);
//! forecasts of TT itself come from [`crate::features::reconstruct`].

pub mod ar;
pub mod gbt;
mod standardizer;
pub mod tree;

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

pub use ar::{fit_ar_diff, ArCoefficients, ArFit};
pub use gbt::{fit_ensemble, GbtEnsemble, GbtParams};
pub use standardizer::TargetStandardizer;
pub use tree::{RegressionTree, TreeNode};

use crate::error::{Error, Result};
use crate::features::FeatureMatrix;

pub const MODEL_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    Naive,
    ArDiff,
    Gbt,
}

impl ModelKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ModelKind::Naive => "naive",
            ModelKind::ArDiff => "ar_diff",
            ModelKind::Gbt => "gbt",
        }
    }
}

/// A fitted forecaster, serializable as a versioned JSON document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainedModel {
    pub format_version: u32,
    pub kind: ModelKind,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub params: Option<GbtParams>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub ar: Option<ArCoefficients>,
    pub standardizer: TargetStandardizer,
    /// Gbt: the exact feature layout it was trained on. AR: the lag columns it reads.
    pub feature_names: Vec<String>,
    #[serde(default)]
    pub base_score: f64,
    #[serde(default)]
    pub trees: Vec<RegressionTree>,
}

/// Random walk: ΔTT forecast is always zero.
pub fn fit_naive() -> TrainedModel {
    TrainedModel {
        format_version: MODEL_FORMAT_VERSION,
        kind: ModelKind::Naive,
        params: None,
        ar: None,
        standardizer: TargetStandardizer::IDENTITY,
        feature_names: Vec::new(),
        base_score: 0.0,
        trees: Vec::new(),
    }
}

/// AR on the first differences of a training TT series. At prediction time the
/// recent differences are read from the `TT_lag*` columns and the base.
pub fn fit_ar(tt: &[f64], p_max: usize) -> Result<TrainedModel> {
    let fit = fit_ar_diff(tt, p_max)?;
    Ok(TrainedModel {
        format_version: MODEL_FORMAT_VERSION,
        kind: ModelKind::ArDiff,
        params: None,
        feature_names: (1..=fit.model.order).map(|k| format!("TT_lag{k}")).collect(),
        ar: Some(fit.model),
        standardizer: TargetStandardizer::IDENTITY,
        base_score: 0.0,
        trees: Vec::new(),
    })
}

/// Boosted trees on the standardized smoothed-ΔTT target of `train`.
pub fn fit_gbt(train: &FeatureMatrix, params: &GbtParams) -> Result<TrainedModel> {
    let standardizer = TargetStandardizer::fit(&train.target);
    let z: Vec<f64> = train.target.iter().map(|v| standardizer.transform(*v)).collect();
    let ensemble = fit_ensemble(&train.data, train.n_features(), &z, params, None)?;
    Ok(TrainedModel {
        format_version: MODEL_FORMAT_VERSION,
        kind: ModelKind::Gbt,
        params: Some(*params),
        ar: None,
        standardizer,
        feature_names: train.feature_names.clone(),
        base_score: ensemble.base_score,
        trees: ensemble.trees,
    })
}

fn describe_mismatch(expected: &[String], got: &[String]) -> String {
    if expected.len() != got.len() {
        return format!("model expects {} features, input has {}", expected.len(), got.len());
    }
    let first = expected.iter().zip(got).position(|(a, b)| a != b).unwrap_or(0);
    format!(
        "feature {first} is `{}` in the model but `{}` in the input",
        expected[first], got[first]
    )
}

impl TrainedModel {
    fn predict_gbt_row(&self, row: &[f64], lr: f64) -> f64 {
        let z = self.base_score + self.trees.iter().map(|t| lr * t.predict(row)).sum::<f64>();
        self.standardizer.inverse(z)
    }

    /// ΔTT forecasts (hours) for every row.
    pub fn predict(&self, input: &FeatureMatrix) -> Result<Vec<f64>> {
        match self.kind {
            ModelKind::Naive => Ok(vec![0.0; input.n_rows()]),
            ModelKind::Gbt => {
                if self.feature_names != input.feature_names {
                    return Err(Error::FeatureMismatch(describe_mismatch(
                        &self.feature_names,
                        &input.feature_names,
                    )));
                }
                let lr = self.params.map_or(1.0, |p| p.learning_rate);
                Ok((0..input.n_rows())
                    .map(|r| self.predict_gbt_row(input.row(r), lr))
                    .collect())
            }
            ModelKind::ArDiff => {
                let ar = self
                    .ar
                    .as_ref()
                    .ok_or_else(|| Error::ModelFormat("ar_diff model without coefficients".into()))?;
                let cols = self
                    .feature_names
                    .iter()
                    .map(|name| {
                        input
                            .feature_index(name)
                            .ok_or_else(|| Error::FeatureMismatch(format!("AR model needs column `{name}`")))
                    })
                    .collect::<Result<Vec<_>>>()?;
                Ok((0..input.n_rows())
                    .map(|r| {
                        // lags[0] is the origin TT itself.
                        let mut lags = vec![input.base[r]];
                        lags.extend(cols.iter().map(|&c| input.value(r, c)));
                        let recent: Vec<f64> = lags.windows(2).map(|w| w[0] - w[1]).collect();
                        ar.forecast(&recent)
                    })
                    .collect())
            }
        }
    }

    /// Feature indices referenced by any tree split.
    pub fn used_features(&self) -> Vec<bool> {
        let mut used = vec![false; self.feature_names.len()];
        for f in self.trees.iter().flat_map(RegressionTree::split_features) {
            used[f] = true;
        }
        used
    }

    pub fn to_json<W: Write>(&self, sink: W) -> Result<()> {
        serde_json::to_writer_pretty(sink, self)?;
        Ok(())
    }

    pub fn from_json<R: Read>(source: R) -> Result<TrainedModel> {
        let m: TrainedModel = serde_json::from_reader(source)?;
        if m.format_version != MODEL_FORMAT_VERSION {
            return Err(Error::ModelFormat(format!(
                "format_version {} (supported: {MODEL_FORMAT_VERSION})",
                m.format_version
            )));
        }
        Ok(m)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use chrono::NaiveDate;

    fn matrix(names: &[&str], rows: &[&[f64]], target: &[f64], base: &[f64]) -> FeatureMatrix {
        let d0 = NaiveDate::from_ymd_opt(2020, 1, 1).unwrap();
        FeatureMatrix {
            origin_dates: (0..rows.len()).map(|i| d0 + chrono::Duration::days(i as i64)).collect(),
            target_dates: (0..rows.len())
                .map(|i| d0 + chrono::Duration::days(i as i64 + 1))
                .collect(),
            feature_names: names.iter().map(|s| s.to_string()).collect(),
            data: rows.iter().flat_map(|r| r.iter().copied()).collect(),
            target: target.to_vec(),
            base: base.to_vec(),
            actual_next: base.iter().zip(target).map(|(b, t)| b + t).collect(),
            set: crate::features::FeatureSet::Baseline,
        }
    }

    #[test]
    fn naive_predicts_zero() {
        let m = matrix(&["TT_lag1"], &[&[1.0], &[2.0]], &[0.5, 0.1], &[3.0, 4.0]);
        assert_eq!(fit_naive().predict(&m).unwrap(), [0.0, 0.0]);
    }

    #[test]
    fn gbt_constant_target_predicts_constant() {
        let rows: Vec<Vec<f64>> = (0..12).map(|i| vec![i as f64]).collect();
        let refs: Vec<&[f64]> = rows.iter().map(Vec::as_slice).collect();
        let m = matrix(&["TT_lag1"], &refs, &[1.25; 12], &[0.0; 12]);
        let model = fit_gbt(&m, &GbtParams::default()).unwrap();
        assert!(model.trees.is_empty());
        for p in model.predict(&m).unwrap() {
            assert!((p - 1.25).abs() < 1e-12);
        }
    }

    #[test]
    fn full_depth_tree_reproduces_training_targets() {
        let xs = [0.3, 1.7, 0.9, 2.5, 4.1, 3.3, 5.0, 0.1];
        let ys = [2.0, -1.0, 0.5, 7.0, 3.0, -2.0, 1.5, 0.25];
        let rows: Vec<Vec<f64>> = xs.iter().map(|x| vec![*x]).collect();
        let refs: Vec<&[f64]> = rows.iter().map(Vec::as_slice).collect();
        let m = matrix(&["f"], &refs, &ys, &[0.0; 8]);
        let params = GbtParams {
            n_estimators: 1,
            learning_rate: 1.0,
            max_depth: 16,
            feature_fraction: 1.0,
            bagging_fraction: 1.0,
            min_samples_leaf: 1,
            seed: 0,
        };
        let model = fit_gbt(&m, &params).unwrap();
        for (p, y) in model.predict(&m).unwrap().iter().zip(ys) {
            assert!((p - y).abs() < 1e-12, "{p} vs {y}");
        }
    }

    #[test]
    fn permuted_columns_rejected() {
        let rows: Vec<Vec<f64>> = (0..12).map(|i| vec![i as f64, (i * i) as f64]).collect();
        let refs: Vec<&[f64]> = rows.iter().map(Vec::as_slice).collect();
        let target: Vec<f64> = (0..12).map(|i| (i % 4) as f64).collect();
        let m = matrix(&["a", "b"], &refs, &target, &[0.0; 12]);
        let model = fit_gbt(
            &m,
            &GbtParams {
                n_estimators: 5,
                ..GbtParams::default()
            },
        )
        .unwrap();
        let mut swapped = m.clone();
        swapped.feature_names.swap(0, 1);
        let err = model.predict(&swapped).unwrap_err();
        assert!(matches!(err, Error::FeatureMismatch(ref s) if s.contains("`a`")));
    }

    #[test]
    fn ar_reads_differences_from_lags() {
        let model = TrainedModel {
            ar: Some(ArCoefficients {
                order: 2,
                intercept: 1.0,
                coefficients: vec![0.5, 0.25],
                aic: 0.0,
            }),
            feature_names: vec!["TT_lag1".into(), "TT_lag2".into()],
            kind: ModelKind::ArDiff,
            ..fit_naive()
        };
        // base 10, lag1 8, lag2 4 -> diffs newest first [2, 4] -> 1 + 1 + 1
        let m = matrix(&["TT_lag2", "TT_lag1"], &[&[4.0, 8.0]], &[0.0], &[10.0]);
        assert_eq!(model.predict(&m).unwrap(), [3.0]);
    }

    #[test]
    fn json_round_trip_is_exact() {
        let rows: Vec<Vec<f64>> = (0..30)
            .map(|i| vec![(i as f64).sin(), (i as f64 * 0.37).cos()])
            .collect();
        let refs: Vec<&[f64]> = rows.iter().map(Vec::as_slice).collect();
        let target: Vec<f64> = (0..30).map(|i| (i as f64 * 0.11).tan()).collect();
        let m = matrix(&["a", "b"], &refs, &target, &[1.0; 30]);
        let model = fit_gbt(
            &m,
            &GbtParams {
                n_estimators: 20,
                ..GbtParams::default()
            },
        )
        .unwrap();
        let mut buf = Vec::new();
        model.to_json(&mut buf).unwrap();
        let back = TrainedModel::from_json(buf.as_slice()).unwrap();
        assert_eq!(back, model);
        assert_eq!(back.predict(&m).unwrap(), model.predict(&m).unwrap());
    }
}
