//! Prominence-based peak detection with a minimum index distance.
//!
//! Prominence follows the usual topographic definition: walk left and right
//! from the peak until terrain strictly higher than the peak (or the series
//! edge) is reached; the lowest point on each side is that side's base, and
//! prominence is the peak height above the higher of the two bases.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PeakOptions {
    pub min_distance: usize,
    pub prominence_threshold: Option<f64>,
}

impl Default for PeakOptions {
    fn default() -> Self {
        PeakOptions {
            min_distance: 7,
            prominence_threshold: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Peak {
    pub index: usize,
    pub prominence: f64,
}

fn left_base(x: &[f64], peak: usize) -> f64 {
    let mut base = x[peak];
    for &v in x[..peak].iter().rev() {
        if v > x[peak] {
            break;
        }
        base = base.min(v);
    }
    base
}

fn right_base(x: &[f64], peak: usize) -> f64 {
    let mut base = x[peak];
    for &v in &x[peak + 1..] {
        if v > x[peak] {
            break;
        }
        base = base.min(v);
    }
    base
}

pub fn prominence(x: &[f64], peak: usize) -> f64 {
    x[peak] - left_base(x, peak).max(right_base(x, peak))
}

/// Strict local maxima `x[i-1] < x[i] > x[i+1]` with their prominences.
pub fn local_maxima(x: &[f64]) -> Vec<Peak> {
    (1..x.len().saturating_sub(1))
        .filter(|&i| x[i - 1] < x[i] && x[i] > x[i + 1])
        .map(|i| Peak {
            index: i,
            prominence: prominence(x, i),
        })
        .collect()
}

/// Drops peaks under the prominence threshold, then enforces the minimum
/// distance greedily: higher prominence first, earlier index on ties.
pub fn select_peaks(mut peaks: Vec<Peak>, opts: &PeakOptions) -> Vec<Peak> {
    if let Some(min) = opts.prominence_threshold {
        peaks.retain(|p| p.prominence >= min);
    }
    peaks.sort_by(|a, b| b.prominence.total_cmp(&a.prominence).then(a.index.cmp(&b.index)));
    let mut kept: Vec<Peak> = Vec::with_capacity(peaks.len());
    for p in peaks {
        if kept.iter().all(|k| k.index.abs_diff(p.index) >= opts.min_distance) {
            kept.push(p);
        }
    }
    kept.sort_by_key(|p| p.index);
    kept
}

pub fn find_peaks(x: &[f64], opts: &PeakOptions) -> Vec<Peak> {
    select_peaks(local_maxima(x), opts)
}

/// 0/1 indicator over the full series.
pub fn detect_peaks(x: &[f64], opts: &PeakOptions) -> Vec<f64> {
    let mut out = vec![0.0; x.len()];
    for p in find_peaks(x, opts) {
        out[p.index] = 1.0;
    }
    out
}

/// Indicator where position `t` only sees `x[..=t]`.
///
/// The last visible point is a provisional peak when it rises above its left
/// neighbour; having no right side yet, its prominence is measured against
/// the left base alone. Earlier peaks are evaluated on the truncated series.
pub fn detect_peaks_causal(x: &[f64], opts: &PeakOptions) -> Vec<f64> {
    (0..x.len())
        .map(|t| {
            if t == 0 || x[t - 1] >= x[t] {
                return 0.0;
            }
            let visible = &x[..=t];
            let mut peaks = local_maxima(visible);
            peaks.push(Peak {
                index: t,
                prominence: x[t] - left_base(visible, t),
            });
            let kept = select_peaks(peaks, opts);
            if kept.last().is_some_and(|p| p.index == t) {
                1.0
            } else {
                0.0
            }
        })
        .collect()
}
