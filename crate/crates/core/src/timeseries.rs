//! Daily aggregation into the multivariate panel: mean throughput time per
//! case-start day plus count and duration series per behavior type.

use std::collections::{BTreeMap, HashMap};
use std::io::{Read, Write};

use chrono::{DateTime, Duration, NaiveDate, Utc};
use serde::{Deserialize, Serialize};

use crate::behavior::{seconds_between, BehaviorType, Transition};
use crate::error::{Error, Result};
use crate::event_log::EventLog;

/// How physical days map to time steps.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CalendarMode {
    /// Only days on which at least one case started.
    #[default]
    CaseStart,
    /// Every day between the first and last case start. Days without starts
    /// carry the previous TT forward and have `n_cases = 0`.
    Dense,
}

/// Strictly increasing time-step dates.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct DailyCalendar {
    dates: Vec<NaiveDate>,
}

impl DailyCalendar {
    pub fn new(dates: Vec<NaiveDate>) -> Result<Self> {
        if dates.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidArgument(
                "calendar dates must be strictly increasing".into(),
            ));
        }
        Ok(DailyCalendar { dates })
    }

    pub fn dates(&self) -> &[NaiveDate] {
        &self.dates
    }

    pub fn len(&self) -> usize {
        self.dates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.dates.is_empty()
    }

    pub fn index_of(&self, date: NaiveDate) -> Option<usize> {
        self.dates.binary_search(&date).ok()
    }

    /// Physical days skipped between consecutive steps, summed.
    pub fn gap_days(&self) -> i64 {
        self.dates.windows(2).map(|w| (w[1] - w[0]).num_days() - 1).sum()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DailyThroughput {
    pub calendar: DailyCalendar,
    /// Mean case duration in hours, per calendar day.
    pub tt: Vec<f64>,
    pub n_cases: Vec<usize>,
}

/// Mean throughput time (hours) of the cases starting on each day.
pub fn daily_throughput(log: &EventLog, mode: CalendarMode) -> DailyThroughput {
    let mut bounds: HashMap<&str, (DateTime<Utc>, DateTime<Utc>)> = HashMap::new();
    for e in log.events() {
        bounds
            .entry(&e.case_id)
            .and_modify(|b| b.1 = e.timestamp)
            .or_insert((e.timestamp, e.timestamp));
    }
    // Sort each day's durations before summing so the result does not depend
    // on hash-map iteration order.
    let mut per_day: BTreeMap<NaiveDate, Vec<f64>> = BTreeMap::new();
    for (start, end) in bounds.values() {
        per_day
            .entry(start.date_naive())
            .or_default()
            .push(seconds_between(start, end) / 3600.0);
    }
    let mut dates = Vec::with_capacity(per_day.len());
    let mut tt = Vec::with_capacity(per_day.len());
    let mut n_cases = Vec::with_capacity(per_day.len());
    for (date, mut hours) in per_day {
        hours.sort_by(f64::total_cmp);
        dates.push(date);
        tt.push(hours.iter().sum::<f64>() / hours.len() as f64);
        n_cases.push(hours.len());
    }
    if mode == CalendarMode::Dense && !dates.is_empty() {
        let (mut d, last) = (dates[0], *dates.last().unwrap());
        let mut dense = (Vec::new(), Vec::new(), Vec::new());
        let mut k = 0;
        while d <= last {
            if dates[k] == d {
                dense.1.push(tt[k]);
                dense.2.push(n_cases[k]);
                k += 1;
            } else {
                dense.1.push(*dense.1.last().unwrap());
                dense.2.push(0);
            }
            dense.0.push(d);
            d += Duration::days(1);
        }
        (dates, tt, n_cases) = dense;
    }
    DailyThroughput {
        calendar: DailyCalendar { dates },
        tt,
        n_cases,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BehaviorSeries {
    /// Indexed by [`BehaviorType::index`].
    pub counts: [Vec<u64>; 4],
    pub time_seconds: [Vec<f64>; 4],
    /// Transitions whose date is not a calendar step.
    pub dropped: usize,
}

/// Buckets transitions by date into per-behavior count and duration series.
pub fn daily_behavior_series(transitions: &[Transition], calendar: &DailyCalendar) -> BehaviorSeries {
    let n = calendar.len();
    let mut counts: [Vec<u64>; 4] = std::array::from_fn(|_| vec![0; n]);
    let mut time_seconds: [Vec<f64>; 4] = std::array::from_fn(|_| vec![0.0; n]);
    let mut dropped = 0;
    for t in transitions {
        match calendar.index_of(t.date) {
            Some(i) => {
                let b = t.behavior.index();
                counts[b][i] += 1;
                time_seconds[b][i] += t.duration_seconds;
            }
            None => dropped += 1,
        }
    }
    BehaviorSeries {
        counts,
        time_seconds,
        dropped,
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct PanelDiagnostics {
    pub dropped_transitions: usize,
    pub calendar_gap_days: i64,
}

/// Calendar-indexed daily panel: TT plus count and duration per behavior type.
#[derive(Debug, Clone, PartialEq)]
pub struct SeriesPanel {
    pub calendar: DailyCalendar,
    pub tt: Vec<f64>,
    pub n_cases: Vec<usize>,
    pub counts: [Vec<u64>; 4],
    pub time_seconds: [Vec<f64>; 4],
}

/// Actor column names in panel and feature order.
pub const ACTOR_COLUMNS: [&str; 8] = [
    "Count_C",
    "Count_I",
    "Count_HI",
    "Count_HB",
    "Time_C_seconds",
    "Time_I_seconds",
    "Time_HI_seconds",
    "Time_HB_seconds",
];

impl SeriesPanel {
    pub fn len(&self) -> usize {
        self.calendar.len()
    }

    pub fn is_empty(&self) -> bool {
        self.calendar.is_empty()
    }

    /// The `k`-th actor column of [`ACTOR_COLUMNS`] as reals.
    pub fn actor_column(&self, k: usize) -> Vec<f64> {
        if k < 4 {
            self.counts[k].iter().map(|&c| c as f64).collect()
        } else {
            self.time_seconds[k - 4].clone()
        }
    }

    /// Panel restricted to the first `n` steps.
    pub fn truncate(&self, n: usize) -> SeriesPanel {
        let n = n.min(self.len());
        SeriesPanel {
            calendar: DailyCalendar {
                dates: self.calendar.dates[..n].to_vec(),
            },
            tt: self.tt[..n].to_vec(),
            n_cases: self.n_cases[..n].to_vec(),
            counts: std::array::from_fn(|b| self.counts[b][..n].to_vec()),
            time_seconds: std::array::from_fn(|b| self.time_seconds[b][..n].to_vec()),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.len();
        let lengths = [self.tt.len(), self.n_cases.len()]
            .into_iter()
            .chain(self.counts.iter().map(Vec::len))
            .chain(self.time_seconds.iter().map(Vec::len));
        for len in lengths {
            if len != n {
                return Err(Error::LengthMismatch {
                    expected: n,
                    actual: len,
                });
            }
        }
        let bad = self
            .tt
            .iter()
            .chain(self.time_seconds.iter().flatten())
            .any(|v| !v.is_finite() || *v < 0.0);
        if bad {
            return Err(Error::InvalidArgument(
                "panel cells must be finite and non-negative".into(),
            ));
        }
        Ok(())
    }
}

/// Builds the panel for a log and its classified transitions.
pub fn assemble_panel(
    log: &EventLog,
    transitions: &[Transition],
    mode: CalendarMode,
) -> Result<(SeriesPanel, PanelDiagnostics)> {
    let throughput = daily_throughput(log, mode);
    if throughput.calendar.is_empty() {
        return Err(Error::NoCompleteCases);
    }
    let behavior = daily_behavior_series(transitions, &throughput.calendar);
    let diagnostics = PanelDiagnostics {
        dropped_transitions: behavior.dropped,
        calendar_gap_days: throughput.calendar.gap_days(),
    };
    let panel = SeriesPanel {
        calendar: throughput.calendar,
        tt: throughput.tt,
        n_cases: throughput.n_cases,
        counts: behavior.counts,
        time_seconds: behavior.time_seconds,
    };
    Ok((panel, diagnostics))
}

const PANEL_HEADER: [&str; 11] = [
    "date",
    "TT",
    "n_cases",
    "Count_C",
    "Count_I",
    "Count_HI",
    "Count_HB",
    "Time_C_seconds",
    "Time_I_seconds",
    "Time_HI_seconds",
    "Time_HB_seconds",
];

pub fn write_panel_csv<W: Write>(panel: &SeriesPanel, sink: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(sink);
    w.write_record(PANEL_HEADER)?;
    for i in 0..panel.len() {
        let mut row = vec![
            panel.calendar.dates[i].format("%Y-%m-%d").to_string(),
            panel.tt[i].to_string(),
            panel.n_cases[i].to_string(),
        ];
        row.extend(BehaviorType::ALL.iter().map(|b| panel.counts[b.index()][i].to_string()));
        row.extend(
            BehaviorType::ALL
                .iter()
                .map(|b| panel.time_seconds[b.index()][i].to_string()),
        );
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_panel_csv<R: Read>(source: R) -> Result<SeriesPanel> {
    let mut reader = csv::Reader::from_reader(source);
    if reader.headers()?.iter().ne(PANEL_HEADER.iter().copied()) {
        return Err(Error::InvalidArgument(format!(
            "panel header must be `{}`",
            PANEL_HEADER.join(",")
        )));
    }
    let mut dates = Vec::new();
    let mut tt = Vec::new();
    let mut n_cases = Vec::new();
    let mut counts: [Vec<u64>; 4] = Default::default();
    let mut time_seconds: [Vec<f64>; 4] = Default::default();
    for (i, rec) in reader.records().enumerate() {
        let rec = rec?;
        let bad = |k: usize| Error::InvalidArgument(format!("panel row {}: bad `{}`", i + 2, &rec[k]));
        dates.push(NaiveDate::parse_from_str(&rec[0], "%Y-%m-%d").map_err(|_| bad(0))?);
        tt.push(rec[1].parse().map_err(|_| bad(1))?);
        n_cases.push(rec[2].parse().map_err(|_| bad(2))?);
        for b in 0..4 {
            counts[b].push(rec[3 + b].parse().map_err(|_| bad(3 + b))?);
            time_seconds[b].push(rec[7 + b].parse().map_err(|_| bad(7 + b))?);
        }
    }
    let panel = SeriesPanel {
        calendar: DailyCalendar::new(dates)?,
        tt,
        n_cases,
        counts,
        time_seconds,
    };
    panel.validate()?;
    Ok(panel)
}
