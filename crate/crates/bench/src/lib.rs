//! Shared inputs for the benchmarks, built from the bundled fixtures.

use traceforge_core::formats::parse_xes;
use traceforge_core::{Dataset, MetamodelSchema, ParseMode, Trace, TraceSet};

const HUMAN_XES: &[u8] = include_bytes!("../../../fixtures/human.xes");
const SCHEMA_JSON: &str = include_str!("../../../fixtures/schema.json");

pub fn schema() -> MetamodelSchema {
    serde_json::from_str(SCHEMA_JSON).expect("bundled schema parses")
}

pub fn human_set() -> TraceSet {
    parse_xes(HUMAN_XES, ParseMode::Strict).expect("bundled log parses").0
}

pub fn human_dataset() -> Dataset {
    Dataset::from_traces("human", human_set(), None)
}

/// The fixture traces repeated `copies` times under fresh ids, for scaling runs.
pub fn enlarged_set(copies: usize) -> TraceSet {
    let base = human_set();
    let traces: Vec<Trace> = (0..copies)
        .flat_map(|c| {
            base.traces.iter().map(move |t| {
                let mut t = t.clone();
                t.id = format!("{}-{c}", t.id);
                t
            })
        })
        .collect();
    TraceSet::new(base.metamodel_id.clone(), traces)
}

/// Event tokens of a trace truncated to `len`.
pub fn tokens(trace: &Trace, len: usize) -> Vec<String> {
    trace.events.iter().take(len).map(|e| e.token()).collect()
}
