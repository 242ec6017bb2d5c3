//! Reading and writing traces: the plain event-line format and XES.

mod lines;
mod xes;

use serde::{Deserialize, Serialize};

pub use lines::{parse_event_line, parse_event_lines, parse_event_lines_from, render_event_lines};
pub use xes::{parse_xes, parse_xes_with, read_dataset_xes, write_dataset_xes, write_xes, write_xes_with, XesKeys};

/// Strict parsing fails on the first bad record; lenient parsing skips it
/// and records why.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ParseMode {
    Strict,
    #[default]
    Lenient,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RejectedLine {
    pub line: usize,
    pub reason: String,
}

/// What a parse accepted and what it skipped.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ParseReport {
    pub source: String,
    pub accepted_events: usize,
    pub rejected_lines: Vec<RejectedLine>,
}

impl ParseReport {
    pub fn new(source: impl Into<String>) -> Self {
        ParseReport {
            source: source.into(),
            ..Default::default()
        }
    }

    /// Records a rejection. Line numbers must not go backwards; a second
    /// rejection on the same line is folded into the previous entry.
    pub(crate) fn reject(&mut self, line: usize, reason: impl Into<String>) {
        let reason = reason.into();
        match self.rejected_lines.last_mut() {
            Some(last) if last.line >= line => {
                last.reason.push_str("; ");
                last.reason.push_str(&reason);
            }
            _ => self.rejected_lines.push(RejectedLine { line, reason }),
        }
    }
}
