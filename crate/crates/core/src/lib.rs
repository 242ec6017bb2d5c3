//! Modeling-event trace toolkit.
//!
//! Traces are ordered logs of modeling-editor operations
//! (`event <class> <featureName> <EVENT_TYPE>`). This crate reads and writes
//! them ([`formats`]), synthesizes new ones through few-shot LLM prompting
//! ([`synth`]), scores synthetic traces against human references
//! ([`metrics`], [`stats`]), and trains and evaluates a similarity-based
//! next-operation recommender ([`recommender`], [`eval`]).

pub mod error;
pub mod eval;
pub mod formats;
pub mod metrics;
pub mod recommender;
pub mod stats;
pub mod synth;
pub mod trace;

pub use error::{EvalError, MetricError, ParseError, RecommendError, StatsError, TraceError};
pub use formats::{ParseMode, ParseReport, XesKeys};
pub use metrics::{DiversityVector, QualityReport};
pub use recommender::{OpKind, RecConfig, Recommendation, RecommenderIndex};
pub use stats::{Alternative, DescriptiveStats, TestResult};
pub use trace::{
    classify_operation, validate_event_against_schema, Dataset, EventType, FeatureKind,
    MetamodelSchema, ModelingEvent, OperationClass, OperationTriple, Origin, SchemaCheck, Trace,
    TraceSet,
};
