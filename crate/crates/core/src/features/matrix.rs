use std::io::{Read, Write};

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use super::peaks::{detect_peaks, detect_peaks_causal, PeakOptions};
use super::target::make_target;
use super::transforms::{lag, rolling_stat, zscore7, RollingStat, MAX_LAG, ROLLING_WINDOWS};
use crate::error::{Error, Result};
use crate::timeseries::{SeriesPanel, ACTOR_COLUMNS};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeatureSet {
    Baseline,
    ActorEnriched,
}

impl FeatureSet {
    pub fn as_str(self) -> &'static str {
        match self {
            FeatureSet::Baseline => "baseline",
            FeatureSet::ActorEnriched => "actor",
        }
    }

    pub fn parse(s: &str) -> Option<FeatureSet> {
        match s {
            "baseline" => Some(FeatureSet::Baseline),
            "actor" | "actor_enriched" => Some(FeatureSet::ActorEnriched),
            _ => None,
        }
    }
}

/// Whether the TT peak indicator may look at the whole series.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PeakMode {
    /// Peaks found on the full series, so the indicator sees the future shape.
    #[default]
    Paper,
    /// Each origin decides using only data up to itself.
    Causal,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FeatureOptions {
    pub peak_mode: PeakMode,
    pub peaks: PeakOptions,
}

/// Feature names for a set, in column order.
pub fn feature_names(set: FeatureSet) -> Vec<String> {
    let mut names = Vec::new();
    let history = |prefix: &str, names: &mut Vec<String>| {
        names.extend((1..=MAX_LAG).map(|k| format!("{prefix}_lag{k}")));
        for w in ROLLING_WINDOWS {
            for stat in RollingStat::ALL {
                names.push(format!("{prefix}_rolling_{}{w}", stat.as_str()));
            }
        }
    };
    history("TT", &mut names);
    names.push("TT_zscore7".into());
    names.push("TT_peak".into());
    if set == FeatureSet::ActorEnriched {
        for col in ACTOR_COLUMNS {
            names.push(col.to_string());
            history(col, &mut names);
        }
    }
    names
}

fn history_columns(series: &[f64]) -> Vec<Vec<Option<f64>>> {
    let mut cols = Vec::with_capacity(MAX_LAG + 9);
    for k in 1..=MAX_LAG {
        cols.push(lag(series, k).expect("lag >= 1"));
    }
    for w in ROLLING_WINDOWS {
        for stat in RollingStat::ALL {
            cols.push(rolling_stat(series, w, stat).expect("window >= 2"));
        }
    }
    cols
}

/// Every feature column over the whole panel, undefined cells as `None`.
/// Columns follow [`feature_names`].
pub fn feature_columns(panel: &SeriesPanel, set: FeatureSet, opts: &FeatureOptions) -> Vec<Vec<Option<f64>>> {
    let tt = &panel.tt;
    let mut cols = history_columns(tt);
    cols.push(zscore7(tt));
    let peaks = match opts.peak_mode {
        PeakMode::Paper => detect_peaks(tt, &opts.peaks),
        PeakMode::Causal => detect_peaks_causal(tt, &opts.peaks),
    };
    cols.push(peaks.into_iter().map(Some).collect());
    if set == FeatureSet::ActorEnriched {
        for k in 0..ACTOR_COLUMNS.len() {
            let series = panel.actor_column(k);
            cols.push(series.iter().copied().map(Some).collect());
            cols.extend(history_columns(&series));
        }
    }
    cols
}

/// Supervised rows: features at an origin day, smoothed ΔTT of the next day as target.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    pub origin_dates: Vec<NaiveDate>,
    /// Calendar day each row forecasts (the next panel day).
    pub target_dates: Vec<NaiveDate>,
    pub feature_names: Vec<String>,
    /// Row-major, `origin_dates.len() * feature_names.len()` cells.
    pub data: Vec<f64>,
    pub target: Vec<f64>,
    pub base: Vec<f64>,
    pub actual_next: Vec<f64>,
    pub set: FeatureSet,
}

impl FeatureMatrix {
    pub fn n_rows(&self) -> usize {
        self.origin_dates.len()
    }

    pub fn n_features(&self) -> usize {
        self.feature_names.len()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        let f = self.n_features();
        &self.data[i * f..(i + 1) * f]
    }

    pub fn value(&self, row: usize, col: usize) -> f64 {
        self.data[row * self.n_features() + col]
    }

    pub fn column(&self, col: usize) -> Vec<f64> {
        (0..self.n_rows()).map(|r| self.value(r, col)).collect()
    }

    pub fn set_column(&mut self, col: usize, values: &[f64]) {
        let f = self.n_features();
        for (r, v) in values.iter().enumerate() {
            self.data[r * f + col] = *v;
        }
    }

    pub fn feature_index(&self, name: &str) -> Option<usize> {
        self.feature_names.iter().position(|n| n == name)
    }

    /// Copy of a contiguous row range.
    pub fn slice_rows(&self, range: std::ops::Range<usize>) -> FeatureMatrix {
        let f = self.n_features();
        FeatureMatrix {
            origin_dates: self.origin_dates[range.clone()].to_vec(),
            target_dates: self.target_dates[range.clone()].to_vec(),
            feature_names: self.feature_names.clone(),
            data: self.data[range.start * f..range.end * f].to_vec(),
            target: self.target[range.clone()].to_vec(),
            base: self.base[range.clone()].to_vec(),
            actual_next: self.actual_next[range].to_vec(),
            set: self.set,
        }
    }

    /// Realized next-day changes `actual_next - base`.
    pub fn true_delta(&self) -> Vec<f64> {
        self.actual_next.iter().zip(&self.base).map(|(a, b)| a - b).collect()
    }

    pub fn write_csv<W: Write>(&self, sink: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(sink);
        let mut header = vec!["origin_date".to_string(), "target_date".to_string()];
        header.extend(self.feature_names.iter().cloned());
        header.extend(["target_dtt", "base_tt", "actual_next_tt"].map(String::from));
        w.write_record(&header)?;
        for r in 0..self.n_rows() {
            let mut rec = Vec::with_capacity(header.len());
            rec.push(self.origin_dates[r].format("%Y-%m-%d").to_string());
            rec.push(self.target_dates[r].format("%Y-%m-%d").to_string());
            rec.extend(self.row(r).iter().map(f64::to_string));
            rec.push(self.target[r].to_string());
            rec.push(self.base[r].to_string());
            rec.push(self.actual_next[r].to_string());
            w.write_record(&rec)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_csv<R: Read>(source: R, set: FeatureSet) -> Result<FeatureMatrix> {
        let mut reader = csv::Reader::from_reader(source);
        let header: Vec<String> = reader.headers()?.iter().map(String::from).collect();
        let tail = ["target_dtt", "base_tt", "actual_next_tt"];
        if header.len() < 5
            || header[0] != "origin_date"
            || header[1] != "target_date"
            || header[header.len() - 3..].iter().ne(tail.iter())
        {
            return Err(Error::InvalidArgument(
                "feature matrix header must be `origin_date,target_date,<features>,target_dtt,base_tt,actual_next_tt`"
                    .into(),
            ));
        }
        let n_feat = header.len() - 5;
        let mut m = FeatureMatrix {
            origin_dates: Vec::new(),
            target_dates: Vec::new(),
            feature_names: header[2..2 + n_feat].to_vec(),
            data: Vec::new(),
            target: Vec::new(),
            base: Vec::new(),
            actual_next: Vec::new(),
            set,
        };
        for (i, rec) in reader.records().enumerate() {
            let rec = rec?;
            let bad = |k: usize| Error::InvalidArgument(format!("feature row {}: bad cell `{}`", i + 2, &rec[k]));
            let num = |k: usize| rec[k].parse::<f64>().map_err(|_| bad(k));
            let date = |k: usize| NaiveDate::parse_from_str(&rec[k], "%Y-%m-%d").map_err(|_| bad(k));
            m.origin_dates.push(date(0)?);
            m.target_dates.push(date(1)?);
            for k in 2..2 + n_feat {
                m.data.push(num(k)?);
            }
            m.target.push(num(n_feat + 2)?);
            m.base.push(num(n_feat + 3)?);
            m.actual_next.push(num(n_feat + 4)?);
        }
        Ok(m)
    }
}

/// Minimum panel length: 20 warm-up steps, one origin, one target day.
pub const MIN_PANEL_LEN: usize = MAX_LAG + 2;

/// Builds the aligned supervised matrix, trimming warm-up rows from the top.
pub fn build_feature_matrix(panel: &SeriesPanel, set: FeatureSet, opts: &FeatureOptions) -> Result<FeatureMatrix> {
    if panel.len() < MIN_PANEL_LEN {
        return Err(Error::InsufficientHistory(format!(
            "feature matrix needs a panel of at least {MIN_PANEL_LEN} days, got {}",
            panel.len()
        )));
    }
    let names = feature_names(set);
    let cols = feature_columns(panel, set, opts);
    debug_assert_eq!(names.len(), cols.len());
    let target = make_target(&panel.tt)?;

    let row_defined = |t: usize| {
        target.smoothed_next[t].is_some() && target.actual_next[t].is_some() && cols.iter().all(|c| c[t].is_some())
    };
    let n = panel.len();
    let first = (0..n)
        .find(|&t| row_defined(t))
        .ok_or_else(|| Error::InsufficientHistory("no origin day has all features defined".into()))?;
    // Only the last day lacks a target, so every row from `first` to n-2 is defined.
    let rows: Vec<usize> = (first..n).filter(|&t| row_defined(t)).collect();

    let mut m = FeatureMatrix {
        origin_dates: Vec::with_capacity(rows.len()),
        target_dates: Vec::with_capacity(rows.len()),
        feature_names: names,
        data: Vec::with_capacity(rows.len() * cols.len()),
        target: Vec::with_capacity(rows.len()),
        base: Vec::with_capacity(rows.len()),
        actual_next: Vec::with_capacity(rows.len()),
        set,
    };
    for &t in &rows {
        m.origin_dates.push(panel.calendar.dates()[t]);
        m.target_dates.push(panel.calendar.dates()[t + 1]);
        m.data.extend(cols.iter().map(|c| c[t].unwrap()));
        m.target.push(target.smoothed_next[t].unwrap());
        m.base.push(target.base[t]);
        m.actual_next.push(target.actual_next[t].unwrap());
    }
    if m.data.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidArgument("non-finite feature value".into()));
    }
    Ok(m)
}
