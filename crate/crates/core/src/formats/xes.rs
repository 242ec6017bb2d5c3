//! The subset of XES (IEEE 1849) used for modeling-event logs.
//!
//! Each `<trace>` becomes a [`Trace`] and each `<event>` a [`ModelingEvent`]
//! built from three string attributes (by default `class`, `featureName` and
//! `eventType`) plus an optional `time:timestamp` date. Key names can be
//! remapped with [`XesKeys`] for logs exported by other recorders. Anything
//! else in the document (extensions, globals, classifiers, unknown
//! attributes) is ignored on read.

use std::collections::BTreeMap;

use chrono::{DateTime, NaiveDateTime, SecondsFormat, Utc};
use quick_xml::events::{BytesDecl, BytesEnd, BytesStart, Event};
use quick_xml::{Reader, Writer};
use serde::{Deserialize, Serialize};

use crate::error::ParseError;
use crate::trace::{Dataset, ModelingEvent, Origin, Trace, TraceSet};

use super::{ParseMode, ParseReport};

const ATTRIBUTE_ELEMENTS: [&[u8]; 6] = [b"string", b"date", b"int", b"float", b"boolean", b"id"];

/// Attribute keys used to read and write events and traces.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct XesKeys {
    pub class: String,
    pub feature: String,
    pub event_type: String,
    pub timestamp: String,
    pub trace_name: String,
    pub model: String,
    pub origin: String,
    pub metamodel: String,
}

impl Default for XesKeys {
    fn default() -> Self {
        XesKeys {
            class: "class".into(),
            feature: "featureName".into(),
            event_type: "eventType".into(),
            timestamp: "time:timestamp".into(),
            trace_name: "concept:name".into(),
            model: "traceforge:model".into(),
            origin: "traceforge:origin".into(),
            metamodel: "traceforge:metamodel".into(),
        }
    }
}

const DATASET_NAME: &str = "traceforge:dataset";
const DATASET_RATIO: &str = "traceforge:syntheticRatio";
const DATASET_SEED: &str = "traceforge:seed";

#[derive(Debug, Default)]
struct RawEvent {
    line: usize,
    ordinal: usize,
    attrs: BTreeMap<String, String>,
}

#[derive(Debug, Default)]
struct RawTrace {
    line: usize,
    attrs: BTreeMap<String, String>,
    events: Vec<ModelingEvent>,
}

#[derive(Debug, Default)]
struct ParsedLog {
    attrs: BTreeMap<String, String>,
    traces: Vec<Trace>,
}

pub fn parse_xes(bytes: &[u8], mode: ParseMode) -> Result<(TraceSet, ParseReport), ParseError> {
    parse_xes_with(bytes, mode, &XesKeys::default())
}

pub fn parse_xes_with(
    bytes: &[u8],
    mode: ParseMode,
    keys: &XesKeys,
) -> Result<(TraceSet, ParseReport), ParseError> {
    let mut report = ParseReport::new("<xes>");
    let log = read_log(bytes, mode, keys, &mut report)?;
    let metamodel_id = log.attrs.get(&keys.metamodel).cloned().unwrap_or_default();
    Ok((TraceSet::new(metamodel_id, log.traces), report))
}

/// Reads a log written by [`write_dataset_xes`]; logs without dataset
/// metadata get a ratio derived from trace origins.
pub fn read_dataset_xes(
    bytes: &[u8],
    mode: ParseMode,
    keys: &XesKeys,
    default_name: &str,
) -> Result<(Dataset, ParseReport), ParseError> {
    let mut report = ParseReport::new(default_name);
    let log = read_log(bytes, mode, keys, &mut report)?;
    let metamodel_id = log.attrs.get(&keys.metamodel).cloned().unwrap_or_default();
    let name = log
        .attrs
        .get(DATASET_NAME)
        .cloned()
        .unwrap_or_else(|| default_name.to_string());
    let seed = log.attrs.get(DATASET_SEED).and_then(|s| s.parse().ok());
    let mut dataset = Dataset::from_traces(name, TraceSet::new(metamodel_id, log.traces), seed);
    if let Some(ratio) = log.attrs.get(DATASET_RATIO).and_then(|s| s.parse::<f64>().ok()) {
        dataset.synthetic_ratio = ratio;
    }
    Ok((dataset, report))
}

fn read_log(
    bytes: &[u8],
    mode: ParseMode,
    keys: &XesKeys,
    report: &mut ParseReport,
) -> Result<ParsedLog, ParseError> {
    let mut reader = Reader::from_reader(bytes);
    reader.config_mut().trim_text(true);

    let mut log = ParsedLog::default();
    let mut stack: Vec<Vec<u8>> = Vec::new();
    let mut current_trace: Option<RawTrace> = None;
    let mut current_event: Option<RawEvent> = None;
    let mut event_ordinal = 0usize;
    let mut newline_count = 0usize;
    let mut counted_upto = 0usize;

    loop {
        let event = reader.read_event()?;
        let pos = (reader.buffer_position() as usize).min(bytes.len());
        newline_count += bytes[counted_upto..pos].iter().filter(|b| **b == b'\n').count();
        counted_upto = pos;
        let line = newline_count + 1;

        match event {
            Event::Start(ref start) | Event::Empty(ref start) => {
                let is_empty = matches!(event, Event::Empty(_));
                let name = start.local_name().as_ref().to_vec();
                let parent = stack.last().map(Vec::as_slice);
                match name.as_slice() {
                    b"trace" if parent == Some(b"log") => {
                        current_trace = Some(RawTrace {
                            line,
                            ..Default::default()
                        });
                        if is_empty {
                            finish_trace(current_trace.take(), &mut log, keys, mode, report)?;
                        }
                    }
                    b"event" if parent == Some(b"trace") && current_trace.is_some() => {
                        event_ordinal += 1;
                        current_event = Some(RawEvent {
                            line,
                            ordinal: event_ordinal,
                            attrs: BTreeMap::new(),
                        });
                        if is_empty {
                            let raw = current_event.take();
                            finish_event(raw, current_trace.as_mut(), keys, mode, report)?;
                        }
                    }
                    element if ATTRIBUTE_ELEMENTS.contains(&element) => {
                        if let Some((key, value)) = key_value(start)? {
                            match parent {
                                Some(b"event") => {
                                    if let Some(ev) = current_event.as_mut() {
                                        ev.attrs.entry(key).or_insert(value);
                                    }
                                }
                                Some(b"trace") => {
                                    if let Some(tr) = current_trace.as_mut() {
                                        tr.attrs.entry(key).or_insert(value);
                                    }
                                }
                                Some(b"log") => {
                                    log.attrs.entry(key).or_insert(value);
                                }
                                _ => {}
                            }
                        }
                    }
                    _ => {}
                }
                if !is_empty {
                    stack.push(name);
                }
            }
            Event::End(ref end) => {
                let name = end.local_name().as_ref().to_vec();
                stack.pop();
                let parent = stack.last().map(Vec::as_slice);
                match name.as_slice() {
                    b"event" if parent == Some(b"trace") => {
                        let raw = current_event.take();
                        finish_event(raw, current_trace.as_mut(), keys, mode, report)?;
                    }
                    b"trace" if parent == Some(b"log") => {
                        finish_trace(current_trace.take(), &mut log, keys, mode, report)?;
                    }
                    _ => {}
                }
            }
            Event::Eof => break,
            _ => {}
        }
    }
    if !stack.is_empty() {
        return Err(ParseError::Xml("unexpected end of document".into()));
    }
    Ok(log)
}

fn key_value(start: &BytesStart<'_>) -> Result<Option<(String, String)>, ParseError> {
    let mut key = None;
    let mut value = None;
    for attr in start.attributes() {
        let attr = attr.map_err(|e| ParseError::Xml(e.to_string()))?;
        match attr.key.local_name().as_ref() {
            b"key" => key = Some(attr.unescape_value()?.into_owned()),
            b"value" => value = Some(attr.unescape_value()?.into_owned()),
            _ => {}
        }
    }
    Ok(key.zip(value))
}

fn finish_event(
    raw: Option<RawEvent>,
    trace: Option<&mut RawTrace>,
    keys: &XesKeys,
    mode: ParseMode,
    report: &mut ParseReport,
) -> Result<(), ParseError> {
    let (Some(raw), Some(trace)) = (raw, trace) else {
        return Ok(());
    };
    match build_event(&raw, keys) {
        Ok(event) => {
            trace.events.push(event);
            report.accepted_events += 1;
            Ok(())
        }
        Err(err) => match mode {
            ParseMode::Strict => Err(err),
            ParseMode::Lenient => {
                report.reject(raw.line, err.to_string());
                Ok(())
            }
        },
    }
}

fn build_event(raw: &RawEvent, keys: &XesKeys) -> Result<ModelingEvent, ParseError> {
    let get = |key: &str| {
        raw.attrs.get(key).ok_or_else(|| ParseError::MissingAttribute {
            key: key.to_string(),
            event_ordinal: raw.ordinal,
        })
    };
    let invalid = |reason: String| ParseError::InvalidEvent {
        event_ordinal: raw.ordinal,
        reason,
    };
    let class = get(&keys.class)?;
    let feature = get(&keys.feature)?;
    let kind = get(&keys.event_type)?;
    let event_type = kind.parse().map_err(|e: crate::error::TraceError| invalid(e.to_string()))?;
    let timestamp = match raw.attrs.get(&keys.timestamp) {
        Some(value) => Some(parse_timestamp(value).ok_or_else(|| invalid(format!("bad timestamp `{value}`")))?),
        None => None,
    };
    let event = ModelingEvent::new(class.as_str(), feature.as_str(), event_type)
        .map_err(|e| invalid(e.to_string()))?
        .with_timestamp(timestamp);
    Ok(event)
}

fn parse_timestamp(value: &str) -> Option<DateTime<Utc>> {
    if let Ok(ts) = DateTime::parse_from_rfc3339(value) {
        return Some(ts.with_timezone(&Utc));
    }
    // Offset-less timestamps are taken as UTC.
    ["%Y-%m-%dT%H:%M:%S%.f", "%Y-%m-%d %H:%M:%S%.f"]
        .iter()
        .find_map(|fmt| NaiveDateTime::parse_from_str(value, fmt).ok())
        .map(|naive| naive.and_utc())
}

fn finish_trace(
    raw: Option<RawTrace>,
    log: &mut ParsedLog,
    keys: &XesKeys,
    mode: ParseMode,
    report: &mut ParseReport,
) -> Result<(), ParseError> {
    let Some(raw) = raw else { return Ok(()) };
    let ordinal = log.traces.len() + 1;
    let id = raw
        .attrs
        .get(&keys.trace_name)
        .cloned()
        .unwrap_or_else(|| format!("trace-{ordinal}"));
    if raw.events.is_empty() {
        return match mode {
            ParseMode::Strict => Err(ParseError::EmptyXesTrace(id)),
            ParseMode::Lenient => {
                report.reject(raw.line, format!("trace `{id}` has no valid events"));
                Ok(())
            }
        };
    }
    let origin = match raw.attrs.get(&keys.origin) {
        None => Origin::Human,
        Some(text) => match text.parse() {
            Ok(origin) => origin,
            Err(err) if mode == ParseMode::Strict => return Err(ParseError::Trace(err)),
            Err(err) => {
                report.reject(raw.line, err.to_string());
                Origin::Human
            }
        },
    };
    let model_id = raw.attrs.get(&keys.model).cloned().unwrap_or_else(|| id.clone());
    log.traces.push(Trace {
        id,
        model_id,
        events: raw.events,
        origin,
    });
    Ok(())
}

pub fn write_xes(set: &TraceSet) -> Vec<u8> {
    write_xes_with(set, &XesKeys::default())
}

pub fn write_xes_with(set: &TraceSet, keys: &XesKeys) -> Vec<u8> {
    write_document(set, keys, &[])
}

/// Writes a dataset as XES, keeping its name, ratio and seed as log
/// attributes.
pub fn write_dataset_xes(dataset: &Dataset, keys: &XesKeys) -> Vec<u8> {
    let mut meta = vec![
        ("string", DATASET_NAME, dataset.name.clone()),
        ("float", DATASET_RATIO, dataset.synthetic_ratio.to_string()),
    ];
    if let Some(seed) = dataset.seed {
        meta.push(("int", DATASET_SEED, seed.to_string()));
    }
    write_document(&dataset.trace_set, keys, &meta)
}

fn write_document(set: &TraceSet, keys: &XesKeys, log_meta: &[(&str, &str, String)]) -> Vec<u8> {
    let mut writer = Writer::new_with_indent(Vec::new(), b' ', 2);
    // Writing into a Vec cannot fail.
    let mut emit = |event: Event<'_>| writer.write_event(event).expect("in-memory write");

    emit(Event::Decl(BytesDecl::new("1.0", Some("UTF-8"), None)));
    emit(Event::Start(BytesStart::new("log").with_attributes([
        ("xes.version", "1849-2016"),
        ("xes.features", ""),
        ("xmlns", "http://www.xes-standard.org/"),
    ])));
    for (name, prefix, uri) in [
        ("Concept", "concept", "http://www.xes-standard.org/concept.xesext"),
        ("Time", "time", "http://www.xes-standard.org/time.xesext"),
    ] {
        emit(Event::Empty(
            BytesStart::new("extension").with_attributes([("name", name), ("prefix", prefix), ("uri", uri)]),
        ));
    }
    emit(attribute("string", &keys.metamodel, &set.metamodel_id));
    for (element, key, value) in log_meta {
        emit(attribute(element, key, value));
    }
    for trace in &set.traces {
        emit(Event::Start(BytesStart::new("trace")));
        emit(attribute("string", &keys.trace_name, &trace.id));
        emit(attribute("string", &keys.model, &trace.model_id));
        emit(attribute("string", &keys.origin, &trace.origin.to_string()));
        for event in &trace.events {
            emit(Event::Start(BytesStart::new("event")));
            emit(attribute("string", &keys.class, event.class_name()));
            emit(attribute("string", &keys.feature, event.feature_name()));
            emit(attribute("string", &keys.event_type, event.event_type().as_str()));
            if let Some(ts) = event.timestamp() {
                let text = ts.to_rfc3339_opts(SecondsFormat::Millis, true);
                emit(attribute("date", &keys.timestamp, &text));
            }
            emit(Event::End(BytesEnd::new("event")));
        }
        emit(Event::End(BytesEnd::new("trace")));
    }
    emit(Event::End(BytesEnd::new("log")));
    let mut bytes = writer.into_inner();
    bytes.push(b'\n');
    bytes
}

fn attribute<'a>(element: &'a str, key: &'a str, value: &'a str) -> Event<'a> {
    Event::Empty(BytesStart::new(element).with_attributes([("key", key), ("value", value)]))
}
