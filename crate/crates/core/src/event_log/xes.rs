use std::io::{BufRead, BufReader, Read};

use flate2::read::GzDecoder;
use quick_xml::events::{BytesStart, Event as XmlEvent};
use quick_xml::Reader;

use super::csv_io::check_budget;
use super::timestamp::TimestampParser;
use super::{Event, EventLog, IngestDiagnostics, UNKNOWN_RESOURCE};
use crate::error::{Error, Result};

const ATTRIBUTE_TAGS: &[&[u8]] = &[b"string", b"date", b"int", b"float", b"boolean", b"id"];

#[derive(Default)]
struct PendingEvent {
    activity: Option<String>,
    timestamp: Option<String>,
    resource: Option<String>,
}

#[derive(Default)]
struct PendingTrace {
    case_id: Option<String>,
    events: Vec<PendingEvent>,
}

/// Reads an XES document (optionally gzip-compressed).
///
/// Case ids come from the trace-level `concept:name`, activities from the
/// event-level `concept:name`, timestamps from `time:timestamp` and resources
/// from `org:resource`. Events without a resource get [`UNKNOWN_RESOURCE`];
/// traces without a name get `trace_<index>`.
pub fn parse_xes<R: Read>(source: R, source_name: &str) -> Result<EventLog> {
    let mut source = BufReader::new(source);
    let gzipped = source.fill_buf()?.starts_with(&[0x1f, 0x8b]);
    if gzipped {
        parse_xml(BufReader::new(GzDecoder::new(source)), source_name)
    } else {
        parse_xml(source, source_name)
    }
}

fn attr(e: &BytesStart<'_>, name: &[u8]) -> Result<Option<String>> {
    for a in e.attributes() {
        let a = a.map_err(|err| Error::Xml(err.to_string()))?;
        if a.key.as_ref() == name {
            let v = a.unescape_value().map_err(|err| Error::Xml(err.to_string()))?;
            return Ok(Some(v.into_owned()));
        }
    }
    Ok(None)
}

fn parse_xml<B: BufRead>(input: B, source_name: &str) -> Result<EventLog> {
    let mut reader = Reader::from_reader(input);
    let mut buf = Vec::new();
    let mut stack: Vec<Vec<u8>> = Vec::new();
    let mut trace: Option<PendingTrace> = None;
    let mut event: Option<PendingEvent> = None;
    let mut trace_index = 0usize;
    let mut diagnostics = IngestDiagnostics::default();
    let parser = TimestampParser::utc();
    let mut events = Vec::new();

    loop {
        let xml_event = reader
            .read_event_into(&mut buf)
            .map_err(|e| Error::Xml(format!("at byte {}: {e}", reader.buffer_position())))?;
        match xml_event {
            XmlEvent::Start(ref e) | XmlEvent::Empty(ref e) => {
                let is_empty = matches!(xml_event, XmlEvent::Empty(_));
                let name = e.local_name().as_ref().to_vec();
                let parent = stack.last().map(Vec::as_slice);
                match name.as_slice() {
                    b"trace" if parent == Some(b"log") => {
                        trace = Some(PendingTrace::default());
                    }
                    b"event" if parent == Some(b"trace") && trace.is_some() => {
                        event = Some(PendingEvent::default());
                    }
                    tag if ATTRIBUTE_TAGS.contains(&tag) => {
                        let key = attr(e, b"key")?;
                        let value = attr(e, b"value")?;
                        if let (Some(key), Some(value)) = (key, value) {
                            match (parent, &mut event, &mut trace) {
                                (Some(b"event"), Some(ev), _) => match key.as_str() {
                                    "concept:name" => ev.activity = Some(value),
                                    "time:timestamp" => ev.timestamp = Some(value),
                                    "org:resource" => ev.resource = Some(value),
                                    _ => {}
                                },
                                (Some(b"trace"), None, Some(tr)) if key == "concept:name" => {
                                    tr.case_id = Some(value);
                                }
                                _ => {}
                            }
                        }
                    }
                    _ => {}
                }
                if is_empty {
                    // A self-closing <event/> or <trace/> ends immediately.
                    close_element(
                        &name,
                        &stack,
                        &mut trace,
                        &mut event,
                        &mut trace_index,
                        &mut events,
                        &mut diagnostics,
                        &parser,
                    );
                } else {
                    stack.push(name);
                }
            }
            XmlEvent::End(ref e) => {
                let name = e.local_name().as_ref().to_vec();
                match stack.pop() {
                    Some(open) if open == name => {}
                    other => {
                        return Err(Error::Xml(format!(
                            "unexpected closing tag `{}` (open: `{}`)",
                            String::from_utf8_lossy(&name),
                            String::from_utf8_lossy(other.as_deref().unwrap_or(b""))
                        )))
                    }
                }
                close_element(
                    &name,
                    &stack,
                    &mut trace,
                    &mut event,
                    &mut trace_index,
                    &mut events,
                    &mut diagnostics,
                    &parser,
                );
            }
            XmlEvent::Eof => break,
            _ => {}
        }
        buf.clear();
    }
    if let Some(open) = stack.last() {
        return Err(Error::Xml(format!(
            "unexpected end of document inside `{}`",
            String::from_utf8_lossy(open)
        )));
    }
    check_budget(&diagnostics, 0.01)?;
    Ok(EventLog::new(source_name, events).with_diagnostics(diagnostics))
}

#[allow(clippy::too_many_arguments)]
fn close_element(
    name: &[u8],
    stack: &[Vec<u8>],
    trace: &mut Option<PendingTrace>,
    event: &mut Option<PendingEvent>,
    trace_index: &mut usize,
    out: &mut Vec<Event>,
    diagnostics: &mut IngestDiagnostics,
    parser: &TimestampParser,
) {
    let parent = stack.last().map(Vec::as_slice);
    match name {
        b"event" if parent == Some(b"trace") => {
            if let (Some(ev), Some(tr)) = (event.take(), trace.as_mut()) {
                tr.events.push(ev);
            }
        }
        b"trace" if parent == Some(b"log") => {
            let Some(tr) = trace.take() else { return };
            let index = *trace_index;
            *trace_index += 1;
            let case_id = match tr.case_id.filter(|c| !c.trim().is_empty()) {
                Some(c) => c,
                None => {
                    log::warn!("trace {index} has no concept:name; using trace_{index}");
                    diagnostics.synthesized_case_ids += 1;
                    format!("trace_{index}")
                }
            };
            for (k, ev) in tr.events.into_iter().enumerate() {
                diagnostics.total_rows += 1;
                let row = diagnostics.total_rows;
                let resource = match ev.resource.filter(|r| !r.trim().is_empty()) {
                    Some(r) => r,
                    None => {
                        diagnostics.unknown_resources += 1;
                        UNKNOWN_RESOURCE.to_string()
                    }
                };
                let built = ev
                    .timestamp
                    .ok_or_else(|| "missing time:timestamp".to_string())
                    .and_then(|t| parser.parse(&t))
                    .and_then(|t| Event::new(&case_id, ev.activity.as_deref().unwrap_or(""), t, &resource));
                match built {
                    Ok(e) => out.push(e),
                    Err(reason) => diagnostics.record_skip(row, format!("trace `{case_id}` event {k}: {reason}")),
                }
            }
        }
        _ => {}
    }
}
