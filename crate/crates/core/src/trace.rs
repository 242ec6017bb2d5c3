//! Domain types for metamodels, modeling events, traces and datasets.
//!
//! A modeling event is one editor operation rendered as
//! `event <class> <featureName> <EVENT_TYPE>`. Traces are ordered event
//! sequences that build a single model; trace sets group the traces recorded
//! (or synthesized) against one metamodel.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use crate::error::TraceError;

/// Kind of change notified by the modeling editor.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum EventType {
    Add,
    Remove,
    Set,
    Unset,
    AddMany,
    RemoveMany,
    Move,
}

impl EventType {
    pub const ALL: [EventType; 7] = [
        EventType::Add,
        EventType::Remove,
        EventType::Set,
        EventType::Unset,
        EventType::AddMany,
        EventType::RemoveMany,
        EventType::Move,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            EventType::Add => "ADD",
            EventType::Remove => "REMOVE",
            EventType::Set => "SET",
            EventType::Unset => "UNSET",
            EventType::AddMany => "ADD_MANY",
            EventType::RemoveMany => "REMOVE_MANY",
            EventType::Move => "MOVE",
        }
    }

    /// Operations that contribute content to a model.
    pub fn is_additive(self) -> bool {
        matches!(self, EventType::Add | EventType::AddMany | EventType::Set)
    }
}

impl fmt::Display for EventType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for EventType {
    type Err = TraceError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        EventType::ALL
            .into_iter()
            .find(|t| t.as_str().eq_ignore_ascii_case(s))
            .ok_or_else(|| TraceError::UnknownEventType(s.to_string()))
    }
}

/// True when `s` is usable as a class or feature name in the line grammar.
pub fn is_identifier(s: &str) -> bool {
    !s.is_empty() && !s.chars().any(char::is_whitespace)
}

/// One modeling operation.
///
/// Equality ignores `raw`: two events are equal when they describe the same
/// operation at the same instant, whatever source line they came from.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ModelingEvent {
    class_name: String,
    feature_name: String,
    event_type: EventType,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    timestamp: Option<DateTime<Utc>>,
    #[serde(default)]
    raw: String,
}

impl ModelingEvent {
    pub fn new(
        class_name: impl Into<String>,
        feature_name: impl Into<String>,
        event_type: EventType,
    ) -> Result<Self, TraceError> {
        let class_name = class_name.into();
        let feature_name = feature_name.into();
        if !is_identifier(&class_name) {
            return Err(TraceError::InvalidIdentifier(class_name));
        }
        if !is_identifier(&feature_name) {
            return Err(TraceError::InvalidIdentifier(feature_name));
        }
        let mut event = ModelingEvent {
            class_name,
            feature_name,
            event_type,
            timestamp: None,
            raw: String::new(),
        };
        event.raw = event.render();
        Ok(event)
    }

    pub fn with_timestamp(mut self, timestamp: Option<DateTime<Utc>>) -> Self {
        self.timestamp = timestamp.map(truncate_to_millis);
        self
    }

    pub fn with_raw(mut self, raw: impl Into<String>) -> Self {
        self.raw = raw.into();
        self
    }

    pub fn class_name(&self) -> &str {
        &self.class_name
    }

    pub fn feature_name(&self) -> &str {
        &self.feature_name
    }

    pub fn event_type(&self) -> EventType {
        self.event_type
    }

    pub fn timestamp(&self) -> Option<DateTime<Utc>> {
        self.timestamp
    }

    /// Source line this event was read from (its canonical rendering when
    /// built programmatically).
    pub fn raw(&self) -> &str {
        &self.raw
    }

    pub fn triple(&self) -> OperationTriple {
        OperationTriple {
            class_name: self.class_name.clone(),
            feature_name: self.feature_name.clone(),
            event_type: self.event_type,
        }
    }

    /// Composite `class.feature.TYPE` token used by the set-based metrics and
    /// the recommender encoding.
    pub fn token(&self) -> String {
        format!("{}.{}.{}", self.class_name, self.feature_name, self.event_type)
    }

    /// `event <class> <feature> <TYPE>`
    pub fn render(&self) -> String {
        format!(
            "event {} {} {}",
            self.class_name, self.feature_name, self.event_type
        )
    }
}

impl PartialEq for ModelingEvent {
    fn eq(&self, other: &Self) -> bool {
        self.class_name == other.class_name
            && self.feature_name == other.feature_name
            && self.event_type == other.event_type
            && self.timestamp == other.timestamp
    }
}

impl Eq for ModelingEvent {}

impl fmt::Display for ModelingEvent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.render())
    }
}

pub(crate) fn truncate_to_millis(ts: DateTime<Utc>) -> DateTime<Utc> {
    let millis = ts.timestamp_millis();
    DateTime::from_timestamp_millis(millis).unwrap_or(ts)
}

/// A (class, feature, event type) operation, ordered lexicographically.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct OperationTriple {
    pub class_name: String,
    pub feature_name: String,
    pub event_type: EventType,
}

impl fmt::Display for OperationTriple {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "event {} {} {}",
            self.class_name, self.feature_name, self.event_type
        )
    }
}

/// Where a trace came from.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", content = "generator", rename_all = "lowercase")]
pub enum Origin {
    Human,
    Synthetic(String),
    Mixed,
}

impl Origin {
    pub fn is_synthetic(&self) -> bool {
        matches!(self, Origin::Synthetic(_))
    }
}

impl fmt::Display for Origin {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Origin::Human => f.write_str("human"),
            Origin::Synthetic(generator) => write!(f, "synthetic:{generator}"),
            Origin::Mixed => f.write_str("mixed"),
        }
    }
}

impl FromStr for Origin {
    type Err = TraceError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "human" => Ok(Origin::Human),
            "mixed" => Ok(Origin::Mixed),
            other => match other.strip_prefix("synthetic:") {
                Some(generator) => Ok(Origin::Synthetic(generator.to_string())),
                None if other == "synthetic" => Ok(Origin::Synthetic(String::new())),
                None => Err(TraceError::UnknownOrigin(other.to_string())),
            },
        }
    }
}

/// Ordered operations that produced one model.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Trace {
    pub id: String,
    pub model_id: String,
    pub events: Vec<ModelingEvent>,
    pub origin: Origin,
}

impl Trace {
    pub fn new(id: impl Into<String>, events: Vec<ModelingEvent>) -> Self {
        let id = id.into();
        Trace {
            model_id: id.clone(),
            id,
            events,
            origin: Origin::Human,
        }
    }

    pub fn with_model_id(mut self, model_id: impl Into<String>) -> Self {
        self.model_id = model_id.into();
        self
    }

    pub fn with_origin(mut self, origin: Origin) -> Self {
        self.origin = origin;
        self
    }

    pub fn validate(&self) -> Result<(), TraceError> {
        if self.events.is_empty() {
            return Err(TraceError::EmptyTrace(self.id.clone()));
        }
        if self.events.iter().all(|e| e.timestamp.is_some()) {
            let sorted = self
                .events
                .windows(2)
                .all(|w| w[0].timestamp <= w[1].timestamp);
            if !sorted {
                return Err(TraceError::UnorderedTimestamps(self.id.clone()));
            }
        }
        Ok(())
    }

    pub fn tokens(&self) -> Vec<String> {
        self.events.iter().map(ModelingEvent::token).collect()
    }

    /// Canonical event-line text, one newline-terminated line per event.
    pub fn render_text(&self) -> String {
        let mut out = String::new();
        for event in &self.events {
            out.push_str(&event.render());
            out.push('\n');
        }
        out
    }
}

/// Traces recorded against one metamodel.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TraceSet {
    pub metamodel_id: String,
    pub traces: Vec<Trace>,
}

impl TraceSet {
    pub fn new(metamodel_id: impl Into<String>, traces: Vec<Trace>) -> Self {
        TraceSet {
            metamodel_id: metamodel_id.into(),
            traces,
        }
    }

    pub fn len(&self) -> usize {
        self.traces.len()
    }

    pub fn is_empty(&self) -> bool {
        self.traces.is_empty()
    }

    pub fn event_count(&self) -> usize {
        self.traces.iter().map(|t| t.events.len()).sum()
    }

    pub fn get(&self, id: &str) -> Option<&Trace> {
        self.traces.iter().find(|t| t.id == id)
    }

    /// Checks id uniqueness and every trace's own invariants.
    pub fn validate(&self) -> Result<(), TraceError> {
        let mut seen = BTreeSet::new();
        for trace in &self.traces {
            if !seen.insert(trace.id.as_str()) {
                return Err(TraceError::DuplicateTraceId(trace.id.clone()));
            }
            trace.validate()?;
        }
        Ok(())
    }

    pub fn synthetic_count(&self) -> usize {
        self.traces.iter().filter(|t| t.origin.is_synthetic()).count()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FeatureKind {
    Attribute,
    Reference,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClassDef {
    pub name: String,
    pub features: BTreeMap<String, FeatureKind>,
}

/// Classes and features a model may instantiate.
///
/// On disk a schema is JSON of the form
/// `{"id": "...", "classes": {"Process": {"name": "attribute", "ports": "reference"}}}`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MetamodelSchema {
    pub id: String,
    pub classes: BTreeMap<String, ClassDef>,
}

#[derive(Serialize, Deserialize)]
struct SchemaFile {
    id: String,
    classes: BTreeMap<String, BTreeMap<String, FeatureKind>>,
}

impl Serialize for MetamodelSchema {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        SchemaFile {
            id: self.id.clone(),
            classes: self
                .classes
                .iter()
                .map(|(name, def)| (name.clone(), def.features.clone()))
                .collect(),
        }
        .serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for MetamodelSchema {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let file = SchemaFile::deserialize(deserializer)?;
        let mut builder = MetamodelSchema::builder(file.id);
        for (class, features) in file.classes {
            for (feature, kind) in features {
                builder = builder.feature(&class, &feature, kind);
            }
        }
        builder.build().map_err(serde::de::Error::custom)
    }
}

pub struct SchemaBuilder {
    id: String,
    classes: BTreeMap<String, ClassDef>,
}

impl SchemaBuilder {
    pub fn feature(mut self, class: &str, feature: &str, kind: FeatureKind) -> Self {
        self.classes
            .entry(class.to_string())
            .or_insert_with(|| ClassDef {
                name: class.to_string(),
                features: BTreeMap::new(),
            })
            .features
            .insert(feature.to_string(), kind);
        self
    }

    pub fn build(self) -> Result<MetamodelSchema, TraceError> {
        let schema = MetamodelSchema {
            id: self.id,
            classes: self.classes,
        };
        schema.validate()?;
        Ok(schema)
    }
}

/// Outcome of checking an event against a schema.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SchemaCheck {
    Valid(FeatureKind),
    UnknownClass,
    UnknownFeature,
}

impl SchemaCheck {
    pub fn is_valid(self) -> bool {
        matches!(self, SchemaCheck::Valid(_))
    }
}

/// Which recommendation table an operation belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum OperationClass {
    ClassOp,
    AttributeOp,
    Unknown,
}

impl MetamodelSchema {
    pub fn builder(id: impl Into<String>) -> SchemaBuilder {
        SchemaBuilder {
            id: id.into(),
            classes: BTreeMap::new(),
        }
    }

    pub fn validate(&self) -> Result<(), TraceError> {
        if !self.classes.values().any(|c| !c.features.is_empty()) {
            return Err(TraceError::EmptySchema(self.id.clone()));
        }
        for (name, class) in &self.classes {
            if !is_identifier(name) || name != &class.name {
                return Err(TraceError::InvalidIdentifier(name.clone()));
            }
            if let Some(bad) = class.features.keys().find(|f| !is_identifier(f)) {
                return Err(TraceError::InvalidIdentifier(bad.clone()));
            }
        }
        Ok(())
    }

    pub fn feature_kind(&self, class: &str, feature: &str) -> Option<FeatureKind> {
        self.classes.get(class)?.features.get(feature).copied()
    }

    /// Schema with the classes and features of both inputs. When a feature is
    /// declared in both with different kinds, `self` wins.
    pub fn union(&self, other: &MetamodelSchema) -> MetamodelSchema {
        let mut classes = other.classes.clone();
        for (name, def) in &self.classes {
            let entry = classes.entry(name.clone()).or_insert_with(|| ClassDef {
                name: name.clone(),
                features: BTreeMap::new(),
            });
            entry.features.extend(def.features.clone());
        }
        MetamodelSchema {
            id: format!("{}+{}", self.id, other.id),
            classes,
        }
    }
}

pub fn validate_event_against_schema(event: &ModelingEvent, schema: &MetamodelSchema) -> SchemaCheck {
    match schema.classes.get(event.class_name()) {
        None => SchemaCheck::UnknownClass,
        Some(class) => match class.features.get(event.feature_name()) {
            Some(kind) => SchemaCheck::Valid(*kind),
            None => SchemaCheck::UnknownFeature,
        },
    }
}

/// Reference features create or connect elements (class operations);
/// attribute features fill in values.
pub fn classify_operation(event: &ModelingEvent, schema: &MetamodelSchema) -> OperationClass {
    classify_triple(event.class_name(), event.feature_name(), schema)
}

pub(crate) fn classify_triple(class: &str, feature: &str, schema: &MetamodelSchema) -> OperationClass {
    match schema.feature_kind(class, feature) {
        Some(FeatureKind::Attribute) => OperationClass::AttributeOp,
        Some(FeatureKind::Reference) => OperationClass::ClassOp,
        None => OperationClass::Unknown,
    }
}

/// A named trace set with its synthetic share.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    pub name: String,
    pub trace_set: TraceSet,
    pub synthetic_ratio: f64,
    pub seed: Option<u64>,
}

impl Dataset {
    /// Wraps a trace set, deriving the synthetic ratio from trace origins.
    pub fn from_traces(name: impl Into<String>, trace_set: TraceSet, seed: Option<u64>) -> Self {
        let synthetic_ratio = observed_ratio(&trace_set);
        Dataset {
            name: name.into(),
            trace_set,
            synthetic_ratio,
            seed,
        }
    }

    pub fn validate(&self) -> Result<(), TraceError> {
        if !(0.0..=1.0).contains(&self.synthetic_ratio) {
            return Err(TraceError::RatioMismatch {
                stored: self.synthetic_ratio,
                observed: observed_ratio(&self.trace_set),
            });
        }
        let total = self.trace_set.len();
        if total > 0 {
            let observed = observed_ratio(&self.trace_set);
            if (observed - self.synthetic_ratio).abs() > 0.5 / total as f64 + 1e-12 {
                return Err(TraceError::RatioMismatch {
                    stored: self.synthetic_ratio,
                    observed,
                });
            }
        }
        self.trace_set.validate()
    }
}

fn observed_ratio(set: &TraceSet) -> f64 {
    if set.is_empty() {
        0.0
    } else {
        set.synthetic_count() as f64 / set.len() as f64
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn process_schema() -> MetamodelSchema {
        MetamodelSchema::builder("hepsy")
            .feature("Process", "name", FeatureKind::Attribute)
            .feature("Process", "ports", FeatureKind::Reference)
            .build()
            .unwrap()
    }

    fn ev(c: &str, f: &str, t: EventType) -> ModelingEvent {
        ModelingEvent::new(c, f, t).unwrap()
    }

    #[test]
    fn event_type_parse_is_case_insensitive() {
        for t in EventType::ALL {
            assert_eq!(t.as_str().to_lowercase().parse::<EventType>().unwrap(), t);
            assert_eq!(t.to_string().parse::<EventType>().unwrap(), t);
        }
        assert!("DELETE".parse::<EventType>().is_err());
    }

    #[test]
    fn additive_types() {
        let additive: Vec<_> = EventType::ALL.into_iter().filter(|t| t.is_additive()).collect();
        assert_eq!(additive, vec![EventType::Add, EventType::Set, EventType::AddMany]);
    }

    #[test]
    fn canonical_rendering() {
        assert_eq!(
            ev("Process", "name", EventType::Set).render(),
            "event Process name SET"
        );
        assert_eq!(
            ev("Channel", "targetProcess", EventType::AddMany).token(),
            "Channel.targetProcess.ADD_MANY"
        );
    }

    #[test]
    fn identifiers_reject_whitespace() {
        assert!(ModelingEvent::new("", "name", EventType::Set).is_err());
        assert!(ModelingEvent::new("Pro cess", "name", EventType::Set).is_err());
        assert!(ModelingEvent::new("Process", "na\tme", EventType::Set).is_err());
    }

    #[test]
    fn schema_lookup_outcomes() {
        let schema = process_schema();
        assert_eq!(
            validate_event_against_schema(&ev("Process", "name", EventType::Set), &schema),
            SchemaCheck::Valid(FeatureKind::Attribute)
        );
        assert_eq!(
            validate_event_against_schema(&ev("Ghost", "name", EventType::Set), &schema),
            SchemaCheck::UnknownClass
        );
        assert_eq!(
            validate_event_against_schema(&ev("Process", "priority", EventType::Set), &schema),
            SchemaCheck::UnknownFeature
        );
    }

    #[test]
    fn classification() {
        let schema = process_schema();
        assert_eq!(
            classify_operation(&ev("Process", "name", EventType::Set), &schema),
            OperationClass::AttributeOp
        );
        assert_eq!(
            classify_operation(&ev("Process", "ports", EventType::Add), &schema),
            OperationClass::ClassOp
        );
        assert_eq!(
            classify_operation(&ev("Ghost", "ports", EventType::Add), &schema),
            OperationClass::Unknown
        );
    }

    #[test]
    fn empty_schema_is_rejected() {
        assert!(MetamodelSchema::builder("x").build().is_err());
    }

    #[test]
    fn schema_json_shape() {
        let schema = process_schema();
        let json = serde_json::to_string(&schema).unwrap();
        assert_eq!(
            json,
            r#"{"id":"hepsy","classes":{"Process":{"name":"attribute","ports":"reference"}}}"#
        );
        let back: MetamodelSchema = serde_json::from_str(&json).unwrap();
        assert_eq!(back, schema);
    }

    #[test]
    fn trace_invariants() {
        assert!(Trace::new("t", vec![]).validate().is_err());
        let t0 = DateTime::from_timestamp_millis(1_000).unwrap();
        let t1 = DateTime::from_timestamp_millis(2_000).unwrap();
        let ordered = Trace::new(
            "t",
            vec![
                ev("A", "b", EventType::Set).with_timestamp(Some(t0)),
                ev("A", "c", EventType::Set).with_timestamp(Some(t1)),
            ],
        );
        assert!(ordered.validate().is_ok());
        let mut reversed = ordered.clone();
        reversed.events.reverse();
        assert!(matches!(
            reversed.validate(),
            Err(TraceError::UnorderedTimestamps(_))
        ));
    }

    #[test]
    fn duplicate_ids_rejected() {
        let t = Trace::new("a", vec![ev("A", "b", EventType::Set)]);
        let set = TraceSet::new("m", vec![t.clone(), t]);
        assert!(matches!(set.validate(), Err(TraceError::DuplicateTraceId(_))));
    }

    #[test]
    fn dataset_ratio_from_origins() {
        let human = Trace::new("h", vec![ev("A", "b", EventType::Set)]);
        let syn = Trace::new("s", vec![ev("A", "b", EventType::Set)])
            .with_origin(Origin::Synthetic("mock".into()));
        let ds = Dataset::from_traces("d", TraceSet::new("m", vec![human, syn]), Some(1));
        assert_eq!(ds.synthetic_ratio, 0.5);
        assert!(ds.validate().is_ok());
        let mut wrong = ds.clone();
        wrong.synthetic_ratio = 1.0;
        assert!(wrong.validate().is_err());
    }

    #[test]
    fn origin_round_trips_through_text() {
        for origin in [
            Origin::Human,
            Origin::Mixed,
            Origin::Synthetic("gpt-4".into()),
        ] {
            assert_eq!(origin.to_string().parse::<Origin>().unwrap(), origin);
        }
    }

    #[test]
    fn raw_does_not_affect_equality() {
        let a = ev("A", "b", EventType::Set);
        let b = a.clone().with_raw("  event A   b set ");
        assert_eq!(a, b);
    }
}
