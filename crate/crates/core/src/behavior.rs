//! Actor behavior classification of consecutive same-case event pairs.
//!
//! For a pair `(e_i, e_{i+1})` of case `c` with timestamps `t_i <= t_{i+1}`:
//!
//! * same resource `r`: **C** if `r` has no event of another case strictly
//!   inside `(t_i, t_{i+1})`, otherwise **I**;
//! * different resource `r'`: **HB** if `r'` has at least one event of another
//!   case in `[t_i, t_{i+1})`, otherwise **HI**.
//!
//! The rule sits behind [`BehaviorRule`] so alternative readings can be swapped in.

use std::collections::HashMap;
use std::fmt;
use std::io::{Read, Write};
use std::str::FromStr;

use chrono::{DateTime, NaiveDate, Utc};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::event_log::{format_timestamp, Event, EventLog, TimestampParser};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum BehaviorType {
    /// Continuation.
    C,
    /// Interruption.
    I,
    /// Handover to an idle actor.
    HI,
    /// Handover to a busy actor.
    HB,
}

impl BehaviorType {
    pub const ALL: [BehaviorType; 4] = [BehaviorType::C, BehaviorType::I, BehaviorType::HI, BehaviorType::HB];

    pub fn as_str(self) -> &'static str {
        match self {
            BehaviorType::C => "C",
            BehaviorType::I => "I",
            BehaviorType::HI => "HI",
            BehaviorType::HB => "HB",
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn is_handover(self) -> bool {
        matches!(self, BehaviorType::HI | BehaviorType::HB)
    }
}

impl fmt::Display for BehaviorType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for BehaviorType {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "C" => Ok(BehaviorType::C),
            "I" => Ok(BehaviorType::I),
            "HI" => Ok(BehaviorType::HI),
            "HB" => Ok(BehaviorType::HB),
            other => Err(Error::InvalidArgument(format!("unknown behavior `{other}`"))),
        }
    }
}

/// A consecutive same-case event pair with its behavior label.
#[derive(Debug, Clone, PartialEq)]
pub struct Transition {
    pub case_id: String,
    pub from_event: Event,
    pub to_event: Event,
    pub behavior: BehaviorType,
    pub duration_seconds: f64,
    /// Calendar date (UTC) of the first event.
    pub date: NaiveDate,
}

pub(crate) fn seconds_between(a: &DateTime<Utc>, b: &DateTime<Utc>) -> f64 {
    let d = *b - *a;
    match d.num_nanoseconds() {
        Some(ns) => ns as f64 / 1e9,
        None => d.num_milliseconds() as f64 / 1e3,
    }
}

/// Timestamps of each resource's events, overall and per case.
pub struct ResourceActivity<'a> {
    by_resource: HashMap<&'a str, Vec<DateTime<Utc>>>,
    by_resource_case: HashMap<(&'a str, &'a str), Vec<DateTime<Utc>>>,
}

/// Interval end-point handling for [`ResourceActivity::other_case_events`].
#[derive(Debug, Clone, Copy)]
pub enum Interval {
    /// `(start, end)`
    Open,
    /// `[start, end)`
    ClosedOpen,
}

fn count_in(times: &[DateTime<Utc>], start: DateTime<Utc>, end: DateTime<Utc>, kind: Interval) -> usize {
    let lo = match kind {
        Interval::Open => times.partition_point(|t| *t <= start),
        Interval::ClosedOpen => times.partition_point(|t| *t < start),
    };
    let hi = times.partition_point(|t| *t < end);
    hi.saturating_sub(lo)
}

impl<'a> ResourceActivity<'a> {
    pub fn new(log: &'a EventLog) -> Self {
        let mut by_resource: HashMap<&str, Vec<DateTime<Utc>>> = HashMap::new();
        let mut by_resource_case: HashMap<(&str, &str), Vec<DateTime<Utc>>> = HashMap::new();
        // The log is time-sorted, so every vector comes out sorted.
        for e in log.events() {
            by_resource.entry(&e.resource).or_default().push(e.timestamp);
            by_resource_case
                .entry((&e.resource, &e.case_id))
                .or_default()
                .push(e.timestamp);
        }
        ResourceActivity {
            by_resource,
            by_resource_case,
        }
    }

    /// Number of events of `resource` belonging to cases other than `case`
    /// with a timestamp in the given interval.
    pub fn other_case_events(
        &self,
        resource: &str,
        case: &str,
        start: DateTime<Utc>,
        end: DateTime<Utc>,
        kind: Interval,
    ) -> usize {
        let all = self
            .by_resource
            .get(resource)
            .map_or(0, |t| count_in(t, start, end, kind));
        let own = self
            .by_resource_case
            .get(&(resource, case))
            .map_or(0, |t| count_in(t, start, end, kind));
        all - own
    }
}

/// Labels one consecutive pair.
pub trait BehaviorRule {
    fn classify(&self, activity: &ResourceActivity<'_>, from: &Event, to: &Event) -> BehaviorType;
}

/// Interval-occupancy rule described in the module docs.
#[derive(Debug, Clone, Copy, Default)]
pub struct IntervalOccupancy;

impl BehaviorRule for IntervalOccupancy {
    fn classify(&self, activity: &ResourceActivity<'_>, from: &Event, to: &Event) -> BehaviorType {
        let (start, end) = (from.timestamp, to.timestamp);
        if from.resource == to.resource {
            let busy = activity.other_case_events(&from.resource, &from.case_id, start, end, Interval::Open);
            if busy == 0 {
                BehaviorType::C
            } else {
                BehaviorType::I
            }
        } else {
            let busy = activity.other_case_events(&to.resource, &from.case_id, start, end, Interval::ClosedOpen);
            if busy == 0 {
                BehaviorType::HI
            } else {
                BehaviorType::HB
            }
        }
    }
}

pub fn classify_transitions(log: &EventLog) -> Vec<Transition> {
    classify_transitions_with(log, &IntervalOccupancy)
}

/// Classifies every consecutive same-case pair; output is ordered by the
/// position of the first event in the log.
pub fn classify_transitions_with<R: BehaviorRule>(log: &EventLog, rule: &R) -> Vec<Transition> {
    let activity = ResourceActivity::new(log);
    let events = log.events();
    let mut previous: HashMap<&str, usize> = HashMap::new();
    let mut out: Vec<(usize, Transition)> = Vec::with_capacity(events.len());
    for (i, to) in events.iter().enumerate() {
        let Some(j) = previous.insert(&to.case_id, i) else {
            continue;
        };
        let from = &events[j];
        out.push((
            j,
            Transition {
                case_id: from.case_id.clone(),
                from_event: from.clone(),
                to_event: to.clone(),
                behavior: rule.classify(&activity, from, to),
                duration_seconds: seconds_between(&from.timestamp, &to.timestamp),
                date: from.timestamp.date_naive(),
            },
        ));
    }
    out.sort_by_key(|(pos, _)| *pos);
    out.into_iter().map(|(_, t)| t).collect()
}

const ENRICHED_HEADER: [&str; 10] = [
    "case_id",
    "from_activity",
    "to_activity",
    "from_ts",
    "to_ts",
    "resource_from",
    "resource_to",
    "behavior",
    "duration_seconds",
    "date",
];

/// Writes the enriched transition log.
pub fn write_enriched_csv<W: Write>(transitions: &[Transition], sink: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(sink);
    w.write_record(ENRICHED_HEADER)?;
    for t in transitions {
        w.write_record([
            t.case_id.as_str(),
            &t.from_event.activity,
            &t.to_event.activity,
            &format_timestamp(&t.from_event.timestamp),
            &format_timestamp(&t.to_event.timestamp),
            &t.from_event.resource,
            &t.to_event.resource,
            t.behavior.as_str(),
            &t.duration_seconds.to_string(),
            &t.date.format("%Y-%m-%d").to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Reads a file produced by [`write_enriched_csv`].
pub fn read_enriched_csv<R: Read>(source: R) -> Result<Vec<Transition>> {
    let mut reader = csv::Reader::from_reader(source);
    let headers = reader.headers()?.clone();
    if headers.iter().ne(ENRICHED_HEADER.iter().copied()) {
        return Err(Error::InvalidArgument(format!(
            "enriched log header must be `{}`",
            ENRICHED_HEADER.join(",")
        )));
    }
    let parser = TimestampParser::utc();
    let bad = |row: usize, what: String| Error::InvalidArgument(format!("enriched log row {row}: {what}"));
    let mut out = Vec::new();
    for (i, rec) in reader.records().enumerate() {
        let rec = rec?;
        let row = i + 2;
        let ts = |k: usize| parser.parse(&rec[k]).map_err(|e| bad(row, e));
        let from_ts = ts(3)?;
        let to_ts = ts(4)?;
        let from_event = Event::new(&rec[0], &rec[1], from_ts, &rec[5]).map_err(|e| bad(row, e))?;
        let to_event = Event::new(&rec[0], &rec[2], to_ts, &rec[6]).map_err(|e| bad(row, e))?;
        out.push(Transition {
            case_id: from_event.case_id.clone(),
            from_event,
            to_event,
            behavior: rec[7].parse()?,
            duration_seconds: rec[8]
                .parse()
                .map_err(|_| bad(row, format!("duration `{}`", &rec[8])))?,
            date: NaiveDate::parse_from_str(&rec[9], "%Y-%m-%d")
                .map_err(|_| bad(row, format!("date `{}`", &rec[9])))?,
        });
    }
    Ok(out)
}
