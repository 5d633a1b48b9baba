//! Event log ingestion: CSV and XES readers, per-case traces, summaries.

mod csv_io;
mod timestamp;
mod xes;

use std::collections::{BTreeMap, BTreeSet, HashMap};

use chrono::{DateTime, Duration, Utc};
use serde::Serialize;

pub use csv_io::{parse_csv, write_canonical_csv, ColumnMapping, CsvOptions};
pub use timestamp::{format_timestamp, TimestampFormat, TimestampParser};
pub use xes::parse_xes;

/// Resource assigned to XES events that carry no `org:resource`.
pub const UNKNOWN_RESOURCE: &str = "UNKNOWN";

/// One executed activity: case, activity, time, resource.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Event {
    pub case_id: String,
    pub activity: String,
    pub timestamp: DateTime<Utc>,
    pub resource: String,
}

impl Event {
    /// Builds an event, trimming the identifiers. Fails if any is empty after trimming.
    pub fn new(case_id: &str, activity: &str, timestamp: DateTime<Utc>, resource: &str) -> Result<Self, String> {
        let field = |name: &str, v: &str| {
            let v = v.trim();
            if v.is_empty() {
                Err(format!("empty {name}"))
            } else {
                Ok(v.to_string())
            }
        };
        Ok(Event {
            case_id: field("case id", case_id)?,
            activity: field("activity", activity)?,
            timestamp,
            resource: field("resource", resource)?,
        })
    }
}

/// Counters collected while reading a source.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct IngestDiagnostics {
    pub total_rows: usize,
    pub skipped_rows: usize,
    /// First few row-level failures, as `row <n>: <reason>`.
    pub row_errors: Vec<String>,
    pub unknown_resources: usize,
    pub synthesized_case_ids: usize,
    pub trimmed_cases: usize,
}

pub(crate) const MAX_RECORDED_ROW_ERRORS: usize = 20;

impl IngestDiagnostics {
    pub(crate) fn record_skip(&mut self, row: usize, reason: String) {
        self.skipped_rows += 1;
        if self.row_errors.len() < MAX_RECORDED_ROW_ERRORS {
            self.row_errors.push(format!("row {row}: {reason}"));
        }
    }
}

/// Time-ordered, immutable collection of events.
///
/// Events are sorted by timestamp with a stable sort, so events sharing a
/// timestamp keep their input order.
#[derive(Debug, Clone, PartialEq)]
pub struct EventLog {
    events: Vec<Event>,
    source_name: String,
    diagnostics: IngestDiagnostics,
}

impl EventLog {
    pub fn new(source_name: impl Into<String>, mut events: Vec<Event>) -> Self {
        events.sort_by_key(|e| e.timestamp);
        EventLog {
            events,
            source_name: source_name.into(),
            diagnostics: IngestDiagnostics::default(),
        }
    }

    pub(crate) fn with_diagnostics(mut self, diagnostics: IngestDiagnostics) -> Self {
        self.diagnostics = diagnostics;
        self
    }

    pub fn events(&self) -> &[Event] {
        &self.events
    }

    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    pub fn source_name(&self) -> &str {
        &self.source_name
    }

    pub fn diagnostics(&self) -> &IngestDiagnostics {
        &self.diagnostics
    }

    /// First and last timestamps, `None` for an empty log.
    pub fn span(&self) -> Option<(DateTime<Utc>, DateTime<Utc>)> {
        Some((self.events.first()?.timestamp, self.events.last()?.timestamp))
    }

    /// Drops every case whose last event lies within the final `days` days of
    /// the log span. Such cases may still have been running when the log was
    /// extracted.
    pub fn trim_boundary_days(&self, days: u32) -> EventLog {
        let Some((_, end)) = self.span() else {
            return self.clone();
        };
        if days == 0 {
            return self.clone();
        }
        let cutoff = end - Duration::days(i64::from(days));
        let mut last: HashMap<&str, DateTime<Utc>> = HashMap::new();
        for e in &self.events {
            last.insert(&e.case_id, e.timestamp);
        }
        let dropped: BTreeSet<&str> = last.iter().filter(|(_, &t)| t > cutoff).map(|(&c, _)| c).collect();
        let events = self
            .events
            .iter()
            .filter(|e| !dropped.contains(e.case_id.as_str()))
            .cloned()
            .collect();
        let mut diagnostics = self.diagnostics.clone();
        diagnostics.trimmed_cases += dropped.len();
        EventLog {
            events,
            source_name: self.source_name.clone(),
            diagnostics,
        }
    }
}

/// The events of one case, in log order.
#[derive(Debug, Clone, PartialEq)]
pub struct CaseTrace<'a> {
    pub case_id: &'a str,
    pub events: Vec<&'a Event>,
}

impl CaseTrace<'_> {
    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }
}

/// Groups the log's events by case. Within a trace, events keep the global order.
pub fn build_traces(log: &EventLog) -> BTreeMap<&str, CaseTrace<'_>> {
    let mut traces: BTreeMap<&str, CaseTrace<'_>> = BTreeMap::new();
    for e in log.events() {
        traces
            .entry(e.case_id.as_str())
            .or_insert_with(|| CaseTrace {
                case_id: &e.case_id,
                events: Vec::new(),
            })
            .events
            .push(e);
    }
    traces
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LogSummary {
    pub n_events: usize,
    pub n_cases: usize,
    pub n_resources: usize,
    pub n_activities: usize,
    pub span: Option<(String, String)>,
}

pub fn log_summary(log: &EventLog) -> LogSummary {
    let mut cases = BTreeSet::new();
    let mut resources = BTreeSet::new();
    let mut activities = BTreeSet::new();
    for e in log.events() {
        cases.insert(e.case_id.as_str());
        resources.insert(e.resource.as_str());
        activities.insert(e.activity.as_str());
    }
    LogSummary {
        n_events: log.len(),
        n_cases: cases.len(),
        n_resources: resources.len(),
        n_activities: activities.len(),
        span: log.span().map(|(a, b)| (format_timestamp(&a), format_timestamp(&b))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use chrono::TimeZone;

    fn ev(case: &str, act: &str, secs: i64, res: &str) -> Event {
        Event::new(case, act, Utc.timestamp_opt(secs, 0).unwrap(), res).unwrap()
    }

    #[test]
    fn event_fields_are_trimmed_and_non_empty() {
        let e = ev(" c1 ", "a", 0, " r1\t");
        assert_eq!(e.case_id, "c1");
        assert_eq!(e.resource, "r1");
        assert!(Event::new("c", "  ", Utc.timestamp_opt(0, 0).unwrap(), "r").is_err());
    }

    #[test]
    fn stable_sort_keeps_input_order_for_ties() {
        let log = EventLog::new(
            "t",
            vec![
                ev("c1", "late", 100, "r"),
                ev("c1", "x", 50, "r"),
                ev("c2", "y", 50, "r"),
                ev("c3", "z", 50, "r"),
            ],
        );
        let acts: Vec<_> = log.events().iter().map(|e| e.activity.as_str()).collect();
        assert_eq!(acts, ["x", "y", "z", "late"]);
        let (a, b) = log.span().unwrap();
        assert_eq!(a.timestamp(), 50);
        assert_eq!(b.timestamp(), 100);
    }

    #[test]
    fn traces_partition_the_log() {
        let log = EventLog::new(
            "t",
            vec![
                ev("a", "1", 0, "r1"),
                ev("b", "1", 1, "r2"),
                ev("a", "2", 2, "r1"),
                ev("b", "2", 3, "r2"),
                ev("c", "1", 4, "r3"),
            ],
        );
        let traces = build_traces(&log);
        assert_eq!(traces.len(), 3);
        assert_eq!(traces["a"].len(), 2);
        assert_eq!(traces["b"].len(), 2);
        assert_eq!(traces["c"].len(), 1);
        assert_eq!(traces.values().map(CaseTrace::len).sum::<usize>(), log.len());
        assert!(build_traces(&EventLog::new("e", vec![])).is_empty());
    }

    #[test]
    fn summary_counts_distinct_values() {
        let log = EventLog::new(
            "t",
            vec![
                ev("a", "x", 0, "r1"),
                ev("a", "y", 1, " r2 "),
                ev("b", "x", 2, "r2"),
                ev("b", "z", 3, "r3"),
                ev("a", "x", 4, "r1"),
            ],
        );
        let s = log_summary(&log);
        assert_eq!((s.n_events, s.n_cases, s.n_resources, s.n_activities), (5, 2, 3, 3));
        let empty = log_summary(&EventLog::new("e", vec![]));
        assert_eq!(
            (empty.n_events, empty.n_cases, empty.n_resources, empty.n_activities),
            (0, 0, 0, 0)
        );
        assert!(empty.span.is_none());
    }

    #[test]
    fn boundary_trim_drops_cases_ending_late() {
        let day = 86_400;
        let log = EventLog::new(
            "t",
            vec![
                ev("early", "a", 0, "r"),
                ev("early", "b", day, "r"),
                ev("late", "a", 2 * day, "r"),
                ev("late", "b", 10 * day, "r"),
                ev("mid", "a", 3 * day, "r"),
                ev("mid", "b", 5 * day, "r"),
            ],
        );
        let trimmed = log.trim_boundary_days(3);
        let cases: BTreeSet<_> = trimmed.events().iter().map(|e| e.case_id.clone()).collect();
        assert_eq!(cases.into_iter().collect::<Vec<_>>(), ["early", "mid"]);
        assert_eq!(trimmed.diagnostics().trimmed_cases, 1);
        assert_eq!(log.trim_boundary_days(0), log);
    }
}
