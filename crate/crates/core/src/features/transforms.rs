//! Causal series transforms. Undefined cells (warm-up) are `None`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const MAX_LAG: usize = 20;
pub const ROLLING_WINDOWS: [usize; 3] = [3, 7, 14];
const ZERO_STD: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RollingStat {
    Mean,
    Std,
    Max,
}

impl RollingStat {
    pub const ALL: [RollingStat; 3] = [RollingStat::Mean, RollingStat::Std, RollingStat::Max];

    pub fn as_str(self) -> &'static str {
        match self {
            RollingStat::Mean => "mean",
            RollingStat::Std => "std",
            RollingStat::Max => "max",
        }
    }
}

/// `out[t] = series[t - k]`.
pub fn lag(series: &[f64], k: usize) -> Result<Vec<Option<f64>>> {
    if k == 0 {
        return Err(Error::InvalidArgument("lags start at 1".into()));
    }
    Ok((0..series.len()).map(|t| t.checked_sub(k).map(|s| series[s])).collect())
}

fn mean(window: &[f64]) -> f64 {
    window.iter().sum::<f64>() / window.len() as f64
}

/// Sample standard deviation (denominator `n - 1`).
fn sample_std(window: &[f64]) -> f64 {
    let m = mean(window);
    let ss: f64 = window.iter().map(|v| (v - m) * (v - m)).sum();
    (ss / (window.len() - 1) as f64).sqrt()
}

/// Trailing window statistic including the current index; defined from `w - 1` on.
pub fn rolling_stat(series: &[f64], w: usize, stat: RollingStat) -> Result<Vec<Option<f64>>> {
    if w < 2 {
        return Err(Error::InvalidArgument(format!("rolling window {w} must be at least 2")));
    }
    Ok((0..series.len())
        .map(|t| {
            let start = (t + 1).checked_sub(w)?;
            let window = &series[start..=t];
            Some(match stat {
                RollingStat::Mean => mean(window),
                RollingStat::Std => sample_std(window),
                RollingStat::Max => window.iter().copied().fold(f64::NEG_INFINITY, f64::max),
            })
        })
        .collect())
}

/// 7-step z-score against the trailing window (which includes the current value).
/// Zero when the window has no spread.
pub fn zscore7(series: &[f64]) -> Vec<Option<f64>> {
    (0..series.len())
        .map(|t| {
            let window = &series[(t + 1).checked_sub(7)?..=t];
            let sd = sample_std(window);
            Some(if sd < ZERO_STD {
                0.0
            } else {
                (series[t] - mean(window)) / sd
            })
        })
        .collect()
}
