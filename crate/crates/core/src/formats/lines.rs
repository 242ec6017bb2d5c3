use crate::error::ParseError;
use crate::trace::{EventType, ModelingEvent, Trace};

use super::{ParseMode, ParseReport};

/// Parses a single `event <class> <feature> <TYPE>` line.
///
/// Tokens are separated by any whitespace run; the event type is matched
/// case-insensitively. Returns the rejection reason on failure.
pub fn parse_event_line(line: &str) -> Result<ModelingEvent, String> {
    let tokens: Vec<&str> = line.split_whitespace().collect();
    match tokens.as_slice() {
        ["event", class, feature, kind] => {
            let event_type: EventType = kind.parse().map_err(|e: crate::error::TraceError| e.to_string())?;
            ModelingEvent::new(*class, *feature, event_type)
                .map(|e| e.with_raw(line))
                .map_err(|e| e.to_string())
        }
        [first, ..] if *first != "event" => Err(format!("expected `event`, found `{first}`")),
        _ => Err(format!("expected 4 tokens, found {}", tokens.len())),
    }
}

/// Parses event-line text into a trace labelled `trace-1`.
pub fn parse_event_lines(text: &str, mode: ParseMode) -> Result<(Trace, ParseReport), ParseError> {
    parse_event_lines_from(text, mode, "trace-1")
}

/// Parses event-line text; `label` becomes both the trace id and the report
/// source.
pub fn parse_event_lines_from(
    text: &str,
    mode: ParseMode,
    label: &str,
) -> Result<(Trace, ParseReport), ParseError> {
    let mut report = ParseReport::new(label);
    let mut events = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        match parse_event_line(line) {
            Ok(event) => events.push(event),
            Err(reason) => match mode {
                ParseMode::Strict => return Err(ParseError::MalformedLine(idx + 1)),
                ParseMode::Lenient => report.reject(idx + 1, reason),
            },
        }
    }
    if events.is_empty() {
        return Err(ParseError::EmptyTrace);
    }
    report.accepted_events = events.len();
    Ok((Trace::new(label, events), report))
}

/// One canonical, newline-terminated line per event.
pub fn render_event_lines(trace: &Trace) -> String {
    trace.render_text()
}
