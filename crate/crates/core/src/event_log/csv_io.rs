use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use super::timestamp::{format_timestamp, TimestampFormat, TimestampParser};
use super::{Event, EventLog, IngestDiagnostics};
use crate::error::{Error, Result};

/// Header names of the four mandatory columns.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ColumnMapping {
    pub case: String,
    pub activity: String,
    pub timestamp: String,
    pub resource: String,
}

impl Default for ColumnMapping {
    fn default() -> Self {
        ColumnMapping {
            case: "case_id".into(),
            activity: "activity".into(),
            timestamp: "timestamp".into(),
            resource: "resource".into(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct CsvOptions {
    pub mapping: ColumnMapping,
    pub timestamp_format: TimestampFormat,
    /// Offset applied to timestamps without zone information.
    pub naive_offset_minutes: i32,
    /// Fraction of rows allowed to fail before the whole parse fails.
    pub max_bad_row_fraction: f64,
}

impl Default for CsvOptions {
    fn default() -> Self {
        CsvOptions {
            mapping: ColumnMapping::default(),
            timestamp_format: TimestampFormat::Auto,
            naive_offset_minutes: 0,
            max_bad_row_fraction: 0.01,
        }
    }
}

/// Reads a comma-separated event log with a header row.
///
/// Rows with an unparseable timestamp or an empty mandatory field are skipped
/// and recorded in the diagnostics; if more than `max_bad_row_fraction` of the
/// rows fail, the parse fails as a whole.
pub fn parse_csv<R: Read>(source: R, source_name: &str, opts: &CsvOptions) -> Result<EventLog> {
    let parser = TimestampParser::new(opts.timestamp_format.clone(), opts.naive_offset_minutes)
        .ok_or_else(|| Error::InvalidArgument(format!("timestamp offset of {} minutes", opts.naive_offset_minutes)))?;
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .from_reader(source);
    let headers = reader.headers()?.clone();
    let position = |name: &str| {
        headers
            .iter()
            .position(|h| h.trim() == name)
            .ok_or_else(|| Error::MissingColumn(name.to_string()))
    };
    let m = &opts.mapping;
    let cols = [
        position(&m.case)?,
        position(&m.activity)?,
        position(&m.timestamp)?,
        position(&m.resource)?,
    ];

    let mut diagnostics = IngestDiagnostics::default();
    let mut events = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let row = i + 2; // 1-based, after the header
        diagnostics.total_rows += 1;
        let record = match record {
            Ok(r) => r,
            Err(e) => {
                diagnostics.record_skip(row, e.to_string());
                continue;
            }
        };
        let [case, activity, ts, resource] = cols.map(|c| record.get(c).unwrap_or(""));
        let parsed = parser.parse(ts).and_then(|t| Event::new(case, activity, t, resource));
        match parsed {
            Ok(e) => events.push(e),
            Err(reason) => diagnostics.record_skip(row, reason),
        }
    }
    check_budget(&diagnostics, opts.max_bad_row_fraction)?;
    Ok(EventLog::new(source_name, events).with_diagnostics(diagnostics))
}

pub(crate) fn check_budget(d: &IngestDiagnostics, allowed: f64) -> Result<()> {
    if d.skipped_rows > 0 && d.skipped_rows as f64 > allowed * d.total_rows as f64 {
        return Err(Error::TooManyBadRows {
            failed: d.skipped_rows,
            total: d.total_rows,
            allowed,
            first: d.row_errors.first().cloned().unwrap_or_default(),
        });
    }
    Ok(())
}

/// Writes the log as `case_id,activity,timestamp,resource` with RFC 3339 UTC timestamps.
pub fn write_canonical_csv<W: Write>(log: &EventLog, sink: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(sink);
    w.write_record(["case_id", "activity", "timestamp", "resource"])?;
    for e in log.events() {
        w.write_record([
            e.case_id.as_str(),
            e.activity.as_str(),
            &format_timestamp(&e.timestamp),
            e.resource.as_str(),
        ])?;
    }
    w.flush()?;
    Ok(())
}
