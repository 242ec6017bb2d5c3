//! Similarity-based next-operation recommender.
//!
//! Traces are treated as path graphs over their events (each event is
//! adjacent to its predecessor and successor). An encoding holds the
//! histogram of base labels (`class.feature.TYPE`) plus one round of
//! neighborhood relabeling, and the kernel is the cosine of the combined
//! count vectors. Given a partial trace, the `k` most similar training traces
//! vote for the operations they contain, weighted by similarity.

use std::collections::BTreeMap;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use crate::error::RecommendError;
use crate::trace::{classify_triple, MetamodelSchema, ModelingEvent, OperationClass, OperationTriple, Trace, TraceSet};

pub const INDEX_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TraceEncoding {
    pub trace_id: String,
    pub base: BTreeMap<String, u32>,
    pub refined: BTreeMap<String, u32>,
}

impl TraceEncoding {
    pub fn base_total(&self) -> u32 {
        self.base.values().sum()
    }

    fn squared_norm(&self) -> f64 {
        self.base
            .values()
            .chain(self.refined.values())
            .map(|c| (*c as f64) * (*c as f64))
            .sum()
    }
}

fn refined_label(token: &str, neighbors: &mut [String]) -> String {
    neighbors.sort();
    format!("{token}({})", neighbors.join(","))
}

pub fn encode_events(trace_id: &str, events: &[ModelingEvent]) -> TraceEncoding {
    let tokens: Vec<String> = events.iter().map(ModelingEvent::token).collect();
    let mut base = BTreeMap::new();
    let mut refined = BTreeMap::new();
    for (i, token) in tokens.iter().enumerate() {
        *base.entry(token.clone()).or_insert(0) += 1;
        let mut neighbors = Vec::with_capacity(2);
        if i > 0 {
            neighbors.push(tokens[i - 1].clone());
        }
        if i + 1 < tokens.len() {
            neighbors.push(tokens[i + 1].clone());
        }
        *refined.entry(refined_label(token, &mut neighbors)).or_insert(0) += 1;
    }
    TraceEncoding {
        trace_id: trace_id.to_string(),
        base,
        refined,
    }
}

pub fn encode_trace(trace: &Trace) -> TraceEncoding {
    encode_events(&trace.id, &trace.events)
}

/// Cosine similarity of the combined base and refined label counts.
pub fn kernel(a: &TraceEncoding, b: &TraceEncoding) -> f64 {
    let na = a.squared_norm();
    let nb = b.squared_norm();
    if na == 0.0 || nb == 0.0 {
        return if na == nb { 1.0 } else { 0.0 };
    }
    let dot = |x: &BTreeMap<String, u32>, y: &BTreeMap<String, u32>| -> f64 {
        x.iter()
            .filter_map(|(label, cx)| y.get(label).map(|cy| (*cx as f64) * (*cy as f64)))
            .sum()
    };
    let d = dot(&a.base, &b.base) + dot(&a.refined, &b.refined);
    (d / (na * nb).sqrt()).clamp(0.0, 1.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum OpKind {
    ClassOps,
    AttributeOps,
}

impl OpKind {
    pub const BOTH: [OpKind; 2] = [OpKind::ClassOps, OpKind::AttributeOps];

    pub fn label(self) -> &'static str {
        match self {
            OpKind::ClassOps => "class",
            OpKind::AttributeOps => "attribute",
        }
    }

    pub fn matches(self, class: OperationClass) -> bool {
        matches!(
            (self, class),
            (OpKind::ClassOps, OperationClass::ClassOp) | (OpKind::AttributeOps, OperationClass::AttributeOp)
        )
    }
}

impl std::str::FromStr for OpKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "class" | "classes" | "classops" => Ok(OpKind::ClassOps),
            "attribute" | "attributes" | "attributeops" => Ok(OpKind::AttributeOps),
            other => Err(format!("unknown operation kind `{other}`")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RecConfig {
    /// Fraction of a trace revealed as context during evaluation.
    pub context_ratio: f64,
    /// Maximum number of recommended operations.
    pub cutoff: usize,
    /// Number of neighbor traces consulted.
    pub neighbors: usize,
}

impl RecConfig {
    pub fn new(context_ratio: f64, cutoff: usize) -> Result<Self, RecommendError> {
        let config = RecConfig {
            context_ratio,
            cutoff,
            neighbors: 5,
        };
        config.validate()?;
        Ok(config)
    }

    pub fn with_neighbors(mut self, neighbors: usize) -> Self {
        self.neighbors = neighbors;
        self
    }

    pub fn validate(&self) -> Result<(), RecommendError> {
        if !(self.context_ratio > 0.0 && self.context_ratio < 1.0) {
            return Err(RecommendError::InvalidConfig(format!(
                "context ratio {} outside (0, 1)",
                self.context_ratio
            )));
        }
        if self.cutoff == 0 {
            return Err(RecommendError::InvalidConfig("cutoff must be at least 1".into()));
        }
        if self.neighbors == 0 {
            return Err(RecommendError::InvalidConfig("neighbors must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoredOperation {
    pub class_name: String,
    pub feature_name: String,
    pub event_type: crate::trace::EventType,
    pub score: f64,
}

impl ScoredOperation {
    pub fn triple(&self) -> OperationTriple {
        OperationTriple {
            class_name: self.class_name.clone(),
            feature_name: self.feature_name.clone(),
            event_type: self.event_type,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Recommendation {
    pub kind: OpKind,
    pub items: Vec<ScoredOperation>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BuildInfo {
    pub trace_count: usize,
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trained_at: Option<String>,
}

/// Trained recommender: one encoding and the event list per training trace.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecommenderIndex {
    pub format_version: u32,
    pub metamodel_id: String,
    pub encodings: Vec<TraceEncoding>,
    pub event_store: BTreeMap<String, Vec<ModelingEvent>>,
    pub schema: MetamodelSchema,
    pub build_info: BuildInfo,
}

pub fn train(traces: &TraceSet, schema: &MetamodelSchema, seed: Option<u64>) -> Result<RecommenderIndex, RecommendError> {
    train_timed(traces, schema, seed).map(|(index, _)| index)
}

/// Like [`train`], also returning how long the build took.
pub fn train_timed(
    traces: &TraceSet,
    schema: &MetamodelSchema,
    seed: Option<u64>,
) -> Result<(RecommenderIndex, Duration), RecommendError> {
    let started = Instant::now();
    if traces.traces.iter().all(|t| t.events.is_empty()) {
        return Err(RecommendError::EmptyTrainingSet);
    }
    let mut encodings = Vec::with_capacity(traces.len());
    let mut event_store = BTreeMap::new();
    for trace in traces.traces.iter().filter(|t| !t.events.is_empty()) {
        encodings.push(encode_trace(trace));
        event_store.insert(trace.id.clone(), trace.events.clone());
    }
    let index = RecommenderIndex {
        format_version: INDEX_FORMAT_VERSION,
        metamodel_id: traces.metamodel_id.clone(),
        build_info: BuildInfo {
            trace_count: encodings.len(),
            seed,
            trained_at: None,
        },
        encodings,
        event_store,
        schema: schema.clone(),
    };
    Ok((index, started.elapsed()))
}

impl RecommenderIndex {
    pub fn len(&self) -> usize {
        self.encodings.len()
    }

    pub fn is_empty(&self) -> bool {
        self.encodings.is_empty()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("index serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, RecommendError> {
        let index: RecommenderIndex =
            serde_json::from_str(text).map_err(|e| RecommendError::InvalidConfig(format!("index file: {e}")))?;
        if index.format_version != INDEX_FORMAT_VERSION {
            return Err(RecommendError::UnsupportedVersion(index.format_version));
        }
        Ok(index)
    }

    /// The `k` most similar training traces with non-zero similarity, most
    /// similar first; ties go to the smaller trace id.
    pub fn nearest(&self, context: &TraceEncoding, k: usize) -> Vec<(f64, &str)> {
        let mut scored: Vec<(f64, &str)> = self
            .encodings
            .iter()
            .map(|enc| (kernel(context, enc), enc.trace_id.as_str()))
            .filter(|(sim, _)| *sim > 0.0)
            .collect();
        scored.sort_by(|a, b| b.0.total_cmp(&a.0).then_with(|| a.1.cmp(b.1)));
        scored.truncate(k);
        scored
    }
}

/// Ranks candidate operations from weighted neighbor traces.
///
/// Each neighbor contributes `similarity × occurrences` to every operation
/// it contains that matches `kind` and is absent from the context. Ties in
/// score are broken by (class, feature, type) ascending.
pub fn rank_candidates<'a, I>(
    neighbors: I,
    context: &[ModelingEvent],
    schema: &MetamodelSchema,
    kind: OpKind,
    cutoff: usize,
) -> Vec<ScoredOperation>
where
    I: IntoIterator<Item = (f64, &'a [ModelingEvent])>,
{
    let seen: std::collections::BTreeSet<OperationTriple> = context.iter().map(ModelingEvent::triple).collect();
    let mut scores: BTreeMap<OperationTriple, f64> = BTreeMap::new();
    for (similarity, events) in neighbors {
        let mut frequency: BTreeMap<OperationTriple, u32> = BTreeMap::new();
        for event in events {
            if !kind.matches(classify_triple(event.class_name(), event.feature_name(), schema)) {
                continue;
            }
            let triple = event.triple();
            if seen.contains(&triple) {
                continue;
            }
            *frequency.entry(triple).or_insert(0) += 1;
        }
        for (triple, count) in frequency {
            *scores.entry(triple).or_insert(0.0) += similarity * count as f64;
        }
    }
    let mut ranked: Vec<(OperationTriple, f64)> = scores.into_iter().collect();
    ranked.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    ranked.truncate(cutoff);
    ranked
        .into_iter()
        .map(|(t, score)| ScoredOperation {
            class_name: t.class_name,
            feature_name: t.feature_name,
            event_type: t.event_type,
            score,
        })
        .collect()
}

pub fn recommend(
    context: &[ModelingEvent],
    index: &RecommenderIndex,
    config: &RecConfig,
    kind: OpKind,
) -> Result<Recommendation, RecommendError> {
    if context.is_empty() {
        return Err(RecommendError::EmptyContext);
    }
    if index.is_empty() {
        return Err(RecommendError::EmptyIndex);
    }
    let encoding = encode_events("<context>", context);
    let neighbors = index.nearest(&encoding, config.neighbors);
    let weighted = neighbors
        .iter()
        .map(|(sim, id)| (*sim, index.event_store[*id].as_slice()));
    Ok(Recommendation {
        kind,
        items: rank_candidates(weighted, context, &index.schema, kind, config.cutoff),
    })
}
