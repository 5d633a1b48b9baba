//! Point metrics on reconstructed TT and percentile bootstrap intervals.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::unit_rng;
use rand::Rng;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub rmse: f64,
    pub mae: f64,
    /// `None` when the actuals are constant.
    pub r2: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Metric {
    Rmse,
    Mae,
    R2,
}

fn check_lengths(actual: &[f64], predicted: &[f64]) -> Result<()> {
    if actual.len() != predicted.len() {
        return Err(Error::LengthMismatch {
            expected: actual.len(),
            actual: predicted.len(),
        });
    }
    if actual.is_empty() {
        return Err(Error::InvalidArgument("metrics need at least one value".into()));
    }
    Ok(())
}

/// Metrics over `idx` positions (with repetition) of the paired vectors.
fn metrics_at(actual: &[f64], predicted: &[f64], idx: impl Iterator<Item = usize> + Clone) -> Metrics {
    let (mut n, mut sse, mut sae, mut sum) = (0usize, 0.0, 0.0, 0.0);
    for i in idx.clone() {
        let e = actual[i] - predicted[i];
        n += 1;
        sse += e * e;
        sae += e.abs();
        sum += actual[i];
    }
    let mean = sum / n as f64;
    let sst: f64 = idx.map(|i| (actual[i] - mean) * (actual[i] - mean)).sum();
    Metrics {
        rmse: (sse / n as f64).sqrt(),
        mae: sae / n as f64,
        r2: (sst > 0.0).then(|| 1.0 - sse / sst),
    }
}

pub fn compute_metrics(actual: &[f64], predicted: &[f64]) -> Result<Metrics> {
    check_lengths(actual, predicted)?;
    Ok(metrics_at(actual, predicted, 0..actual.len()))
}

pub fn rmse(actual: &[f64], predicted: &[f64]) -> Result<f64> {
    compute_metrics(actual, predicted).map(|m| m.rmse)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BootstrapOptions {
    pub replicates: usize,
    pub alpha: f64,
    /// Moving-block resampling with this block length; i.i.d. days when `None`.
    pub block_length: Option<usize>,
}

impl Default for BootstrapOptions {
    fn default() -> Self {
        BootstrapOptions {
            replicates: 1000,
            alpha: 0.05,
            block_length: None,
        }
    }
}

pub const MIN_BOOTSTRAP_LEN: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub low: f64,
    pub high: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricIntervals {
    pub rmse: Interval,
    pub mae: Interval,
    pub r2: Option<Interval>,
}

/// Linear-interpolation percentile of sorted data (`q` in [0, 1]).
pub fn percentile(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}

fn resample(n: usize, block: Option<usize>, seed: u64, b: usize) -> Vec<usize> {
    let mut rng = unit_rng(seed, &[b as u64]);
    match block {
        None | Some(0) | Some(1) => (0..n).map(|_| rng.gen_range(0..n)).collect(),
        Some(len) => {
            let len = len.min(n);
            let mut idx = Vec::with_capacity(n + len);
            while idx.len() < n {
                let start = rng.gen_range(0..=n - len);
                idx.extend(start..start + len);
            }
            idx.truncate(n);
            idx
        }
    }
}

fn interval(mut values: Vec<f64>, alpha: f64) -> Option<Interval> {
    if values.is_empty() {
        return None;
    }
    values.sort_by(f64::total_cmp);
    Some(Interval {
        low: percentile(&values, alpha / 2.0),
        high: percentile(&values, 1.0 - alpha / 2.0),
    })
}

/// Percentile intervals for all three metrics from one shared set of
/// resamples. Replicate `b` draws from the stream keyed by `(seed, b)`, so
/// two calls with the same seed and length resample identical days.
pub fn bootstrap_metrics(
    actual: &[f64],
    predicted: &[f64],
    opts: &BootstrapOptions,
    seed: u64,
) -> Result<MetricIntervals> {
    check_lengths(actual, predicted)?;
    let n = actual.len();
    if n < MIN_BOOTSTRAP_LEN {
        return Err(Error::InsufficientHistory(format!(
            "bootstrap needs at least {MIN_BOOTSTRAP_LEN} days, got {n}"
        )));
    }
    if opts.replicates == 0 || !(opts.alpha > 0.0 && opts.alpha < 1.0) {
        return Err(Error::InvalidArgument(
            "bootstrap needs replicates > 0 and alpha in (0, 1)".into(),
        ));
    }
    let reps: Vec<Metrics> = (0..opts.replicates)
        .into_par_iter()
        .map(|b| {
            let idx = resample(n, opts.block_length, seed, b);
            metrics_at(actual, predicted, idx.iter().copied())
        })
        .collect();
    Ok(MetricIntervals {
        rmse: interval(reps.iter().map(|m| m.rmse).collect(), opts.alpha).expect("replicates > 0"),
        mae: interval(reps.iter().map(|m| m.mae).collect(), opts.alpha).expect("replicates > 0"),
        // Replicates that drew constant actuals have no R² and are left out.
        r2: interval(reps.iter().filter_map(|m| m.r2).collect(), opts.alpha),
    })
}

/// Interval for a single metric; `None` only for R² when no replicate defines it.
pub fn bootstrap_ci(
    actual: &[f64],
    predicted: &[f64],
    metric: Metric,
    opts: &BootstrapOptions,
    seed: u64,
) -> Result<Option<Interval>> {
    let all = bootstrap_metrics(actual, predicted, opts, seed)?;
    Ok(match metric {
        Metric::Rmse => Some(all.rmse),
        Metric::Mae => Some(all.mae),
        Metric::R2 => all.r2,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn perfect_prediction() {
        let y = [1.0, 2.0, 3.5];
        let m = compute_metrics(&y, &y).unwrap();
        assert_eq!((m.rmse, m.mae, m.r2), (0.0, 0.0, Some(1.0)));
    }

    #[test]
    fn hand_example() {
        let m = compute_metrics(&[1.0, 2.0], &[2.0, 4.0]).unwrap();
        assert!((m.rmse - 2.5f64.sqrt()).abs() < 1e-15);
        assert_eq!(m.mae, 1.5);
    }

    #[test]
    fn mean_prediction_has_zero_r2() {
        let y = [1.0, 4.0, 7.0];
        let m = compute_metrics(&y, &[4.0; 3]).unwrap();
        assert_eq!(m.r2, Some(0.0));
        assert_eq!(compute_metrics(&[2.0; 3], &[1.0; 3]).unwrap().r2, None);
    }

    #[test]
    fn length_mismatch() {
        assert!(matches!(
            compute_metrics(&[1.0], &[1.0, 2.0]),
            Err(Error::LengthMismatch { .. })
        ));
    }

    #[test]
    fn percentile_matches_linear_rule() {
        let v = [1.0, 2.0, 3.0, 4.0];
        assert_eq!(percentile(&v, 0.0), 1.0);
        assert_eq!(percentile(&v, 1.0), 4.0);
        assert!((percentile(&v, 0.025) - 1.075).abs() < 1e-12);
        assert_eq!(percentile(&v, 0.5), 2.5);
    }

    #[test]
    fn perfect_bootstrap_collapses() {
        let y: Vec<f64> = (0..20).map(f64::from).collect();
        let ci = bootstrap_ci(&y, &y, Metric::Rmse, &BootstrapOptions::default(), 3)
            .unwrap()
            .unwrap();
        assert_eq!((ci.low, ci.high), (0.0, 0.0));
    }

    #[test]
    fn bootstrap_is_seeded() {
        let a: Vec<f64> = (0..30).map(|i| (i as f64 * 0.7).sin()).collect();
        let p: Vec<f64> = (0..30)
            .map(|i| (i as f64 * 0.7).sin() + (i as f64).cos() * 0.2)
            .collect();
        let opts = BootstrapOptions {
            replicates: 200,
            ..Default::default()
        };
        let x = bootstrap_metrics(&a, &p, &opts, 11).unwrap();
        assert_eq!(x, bootstrap_metrics(&a, &p, &opts, 11).unwrap());
        assert_ne!(x, bootstrap_metrics(&a, &p, &opts, 12).unwrap());
        let blocks = BootstrapOptions {
            block_length: Some(7),
            ..opts
        };
        let b = bootstrap_metrics(&a, &p, &blocks, 11).unwrap();
        assert!(b.rmse.low <= b.rmse.high);
    }

    #[test]
    fn block_resample_is_contiguous() {
        let idx = resample(20, Some(7), 5, 0);
        assert_eq!(idx.len(), 20);
        for chunk in idx.chunks(7) {
            assert!(chunk.windows(2).all(|w| w[1] == w[0] + 1));
        }
    }

    #[test]
    fn short_series_rejected() {
        let y = [1.0; 9];
        assert!(bootstrap_metrics(&y, &y, &BootstrapOptions::default(), 0).is_err());
    }
}
