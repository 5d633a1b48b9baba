//! Smoothed first-difference target and reconstruction of TT forecasts.

use crate::error::{Error, Result};

/// Per-origin target columns, aligned with the TT series. Origins without a
/// next day (the last index) or with too little history are `None`.
#[derive(Debug, Clone, PartialEq)]
pub struct TargetSeries {
    /// Smoothed ΔTT at `t + 1`: mean of the diffs at `t - 1`, `t`, `t + 1`.
    pub smoothed_next: Vec<Option<f64>>,
    /// TT at the origin.
    pub base: Vec<f64>,
    /// TT at `t + 1`.
    pub actual_next: Vec<Option<f64>>,
}

/// `diff[t] = tt[t] - tt[t-1]`, undefined at 0.
pub fn first_difference(tt: &[f64]) -> Vec<Option<f64>> {
    (0..tt.len()).map(|t| t.checked_sub(1).map(|p| tt[t] - tt[p])).collect()
}

/// Trailing 3-point mean of the first difference, defined from index 3.
pub fn smoothed_difference(tt: &[f64]) -> Vec<Option<f64>> {
    let diff = first_difference(tt);
    (0..tt.len())
        .map(|t| {
            if t < 3 {
                return None;
            }
            Some((diff[t - 2]? + diff[t - 1]? + diff[t]?) / 3.0)
        })
        .collect()
}

pub fn make_target(tt: &[f64]) -> Result<TargetSeries> {
    if tt.len() < 4 {
        return Err(Error::InsufficientHistory(format!(
            "target needs at least 4 days of TT, got {}",
            tt.len()
        )));
    }
    let smoothed = smoothed_difference(tt);
    let n = tt.len();
    Ok(TargetSeries {
        smoothed_next: (0..n).map(|t| smoothed.get(t + 1).copied().flatten()).collect(),
        base: tt.to_vec(),
        actual_next: (0..n).map(|t| tt.get(t + 1).copied()).collect(),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct Reconstruction {
    pub values: Vec<f64>,
    /// Forecasts that came out negative and were clamped to zero.
    pub clamped: usize,
}

/// `tt_hat[d+1] = base[d] + dtt_hat[d+1]`, clamped at zero.
pub fn reconstruct(base: &[f64], predicted_delta: &[f64]) -> Result<Reconstruction> {
    if base.len() != predicted_delta.len() {
        return Err(Error::LengthMismatch {
            expected: base.len(),
            actual: predicted_delta.len(),
        });
    }
    let mut clamped = 0;
    let values = base
        .iter()
        .zip(predicted_delta)
        .map(|(b, d)| {
            let v = b + d;
            if v < 0.0 {
                clamped += 1;
                0.0
            } else {
                v
            }
        })
        .collect();
    Ok(Reconstruction { values, clamped })
}
