//! Squared-loss gradient boosting over [`RegressionTree`]s.
//!
//! Round `m` draws its row sample (bagging fraction) and feature sample
//! (feature fraction), both without replacement, from a ChaCha8 stream keyed
//! by `(seed, m)`; see [`crate::rng`].

use serde::{Deserialize, Serialize};

use super::tree::{fit_tree, RegressionTree, TrainingData, TreeParams};
use crate::error::{Error, Result};
use crate::rng::{sample_without_replacement, unit_rng};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GbtParams {
    pub n_estimators: usize,
    pub learning_rate: f64,
    pub max_depth: usize,
    pub feature_fraction: f64,
    pub bagging_fraction: f64,
    #[serde(default = "default_min_samples_leaf")]
    pub min_samples_leaf: usize,
    #[serde(default = "default_seed")]
    pub seed: u64,
}

fn default_min_samples_leaf() -> usize {
    5
}

fn default_seed() -> u64 {
    42
}

impl Default for GbtParams {
    fn default() -> Self {
        GbtParams {
            n_estimators: 1000,
            learning_rate: 0.1,
            max_depth: 5,
            feature_fraction: 0.9,
            bagging_fraction: 0.9,
            min_samples_leaf: default_min_samples_leaf(),
            seed: default_seed(),
        }
    }
}

impl GbtParams {
    pub fn validate(&self) -> Result<()> {
        let frac = |name: &str, v: f64| {
            if v > 0.0 && v <= 1.0 {
                Ok(())
            } else {
                Err(Error::InvalidArgument(format!("{name} must be in (0, 1], got {v}")))
            }
        };
        frac("feature_fraction", self.feature_fraction)?;
        frac("bagging_fraction", self.bagging_fraction)?;
        if self.max_depth == 0 {
            return Err(Error::InvalidArgument("max_depth must be at least 1".into()));
        }
        if self.min_samples_leaf == 0 {
            return Err(Error::InvalidArgument("min_samples_leaf must be positive".into()));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "learning_rate must be positive, got {}",
                self.learning_rate
            )));
        }
        Ok(())
    }
}

/// Fitted ensemble in standardized target units.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GbtEnsemble {
    pub base_score: f64,
    pub learning_rate: f64,
    pub trees: Vec<RegressionTree>,
}

impl GbtEnsemble {
    pub fn predict(&self, row: &[f64]) -> f64 {
        self.base_score
            + self
                .trees
                .iter()
                .map(|t| self.learning_rate * t.predict(row))
                .sum::<f64>()
    }
}

fn subsample_size(fraction: f64, n: usize) -> usize {
    ((fraction * n as f64).round() as usize).clamp(1, n.max(1))
}

/// Per-round hook receiving the training SSE after each tree.
pub type RoundObserver<'a> = &'a mut dyn FnMut(usize, f64);

/// Boosts trees on `targets` (already standardized).
pub fn fit_ensemble(
    rows: &[f64],
    n_features: usize,
    targets: &[f64],
    params: &GbtParams,
    mut observer: Option<RoundObserver<'_>>,
) -> Result<GbtEnsemble> {
    params.validate()?;
    let n = targets.len();
    if n_features == 0 || rows.len() != n * n_features {
        return Err(Error::LengthMismatch {
            expected: n * n_features.max(1),
            actual: rows.len(),
        });
    }
    if n < 2 * params.min_samples_leaf {
        return Err(Error::InsufficientHistory(format!(
            "boosting needs at least {} rows, got {n}",
            2 * params.min_samples_leaf
        )));
    }
    let base_score = targets.iter().sum::<f64>() / n as f64;
    let mut ensemble = GbtEnsemble {
        base_score,
        learning_rate: params.learning_rate,
        trees: Vec::new(),
    };
    if targets.iter().all(|t| *t == targets[0]) {
        return Ok(ensemble);
    }

    let data = TrainingData::new(rows, n_features);
    let mut prediction = vec![base_score; n];
    let mut residual = vec![0.0; n];
    let tree_params = TreeParams {
        max_depth: params.max_depth,
        min_samples_leaf: params.min_samples_leaf,
    };
    let n_rows_sampled = subsample_size(params.bagging_fraction, n);
    let n_features_sampled = subsample_size(params.feature_fraction, n_features);

    for m in 0..params.n_estimators {
        for i in 0..n {
            residual[i] = targets[i] - prediction[i];
        }
        let mut rng = unit_rng(params.seed, &[m as u64]);
        let sample = sample_without_replacement(&mut rng, n, n_rows_sampled);
        let features = sample_without_replacement(&mut rng, n_features, n_features_sampled);
        let tree = fit_tree(&data, &residual, &sample, &features, tree_params);
        for (i, p) in prediction.iter_mut().enumerate() {
            *p += params.learning_rate * tree.predict(data.row(i));
        }
        ensemble.trees.push(tree);
        if let Some(obs) = observer.as_mut() {
            let sse = prediction.iter().zip(targets).map(|(p, t)| (t - p) * (t - p)).sum();
            obs(m, sse);
        }
    }
    Ok(ensemble)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn no_subsampling(n_estimators: usize, lr: f64, depth: usize) -> GbtParams {
        GbtParams {
            n_estimators,
            learning_rate: lr,
            max_depth: depth,
            feature_fraction: 1.0,
            bagging_fraction: 1.0,
            min_samples_leaf: 1,
            seed: 1,
        }
    }

    #[test]
    fn constant_target_has_no_trees() {
        let rows = [1.0, 2.0, 3.0, 4.0];
        let e = fit_ensemble(&rows, 1, &[2.5; 4], &no_subsampling(10, 0.1, 3), None).unwrap();
        assert!(e.trees.is_empty());
        assert_eq!(e.predict(&[9.0]), 2.5);
    }

    #[test]
    fn single_stump_matches_step() {
        let rows = [1.0, 2.0, 3.0, 4.0];
        let y = [0.0, 0.0, 1.0, 1.0];
        let e = fit_ensemble(&rows, 1, &y, &no_subsampling(1, 1.0, 1), None).unwrap();
        assert_eq!(e.trees.len(), 1);
        assert_eq!(e.trees[0].nodes[0].threshold, 2.5);
        for (x, t) in rows.iter().zip(y) {
            assert!((e.predict(&[*x]) - t).abs() < 1e-15);
        }
    }

    #[test]
    fn training_sse_never_increases() {
        let n = 40;
        let rows: Vec<f64> = (0..n * 2).map(|i| ((i * 37) % 23) as f64).collect();
        let y: Vec<f64> = (0..n).map(|i| ((i * 13) % 7) as f64 - 3.0).collect();
        let mut history = Vec::new();
        let mut obs = |_: usize, sse: f64| history.push(sse);
        fit_ensemble(&rows, 2, &y, &no_subsampling(50, 0.3, 2), Some(&mut obs)).unwrap();
        assert!(history.windows(2).all(|w| w[1] <= w[0]));
    }

    #[test]
    fn deterministic_under_seed() {
        let n = 60;
        let rows: Vec<f64> = (0..n * 3).map(|i| ((i * 31) % 17) as f64).collect();
        let y: Vec<f64> = (0..n).map(|i| ((i * 7) % 11) as f64).collect();
        let p = GbtParams {
            n_estimators: 30,
            learning_rate: 0.1,
            max_depth: 3,
            feature_fraction: 0.6,
            bagging_fraction: 0.8,
            min_samples_leaf: 2,
            seed: 9,
        };
        let a = fit_ensemble(&rows, 3, &y, &p, None).unwrap();
        let b = fit_ensemble(&rows, 3, &y, &p, None).unwrap();
        assert_eq!(a, b);
        let c = fit_ensemble(&rows, 3, &y, &GbtParams { seed: 10, ..p }, None).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn invalid_params_rejected() {
        let rows = [1.0; 20];
        let y: Vec<f64> = (0..20).map(f64::from).collect();
        let bad = GbtParams {
            feature_fraction: 0.0,
            ..GbtParams::default()
        };
        assert!(fit_ensemble(&rows, 1, &y, &bad, None).is_err());
        let few = GbtParams::default();
        assert!(matches!(
            fit_ensemble(&rows[..8], 1, &y[..8], &few, None),
            Err(Error::InsufficientHistory(_))
        ));
    }
}
