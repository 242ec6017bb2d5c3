use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TraceError {
    #[error("unknown event type `{0}`")]
    UnknownEventType(String),
    #[error("invalid identifier `{0}`: must be non-empty without whitespace")]
    InvalidIdentifier(String),
    #[error("unknown trace origin `{0}`")]
    UnknownOrigin(String),
    #[error("trace `{0}` has no events")]
    EmptyTrace(String),
    #[error("trace `{0}` has decreasing timestamps")]
    UnorderedTimestamps(String),
    #[error("duplicate trace id `{0}`")]
    DuplicateTraceId(String),
    #[error("schema `{0}` declares no features")]
    EmptySchema(String),
    #[error("stored synthetic ratio {stored} does not match observed {observed}")]
    RatioMismatch { stored: f64, observed: f64 },
}

#[derive(Debug, Error)]
pub enum ParseError {
    #[error("malformed event line {0}")]
    MalformedLine(usize),
    #[error("no events parsed")]
    EmptyTrace,
    #[error("xml error: {0}")]
    Xml(String),
    #[error("event {event_ordinal}: missing attribute `{key}`")]
    MissingAttribute { key: String, event_ordinal: usize },
    #[error("event {event_ordinal}: {reason}")]
    InvalidEvent { event_ordinal: usize, reason: String },
    #[error("trace `{0}` has no events")]
    EmptyXesTrace(String),
    #[error(transparent)]
    Trace(#[from] TraceError),
}

impl From<quick_xml::Error> for ParseError {
    fn from(err: quick_xml::Error) -> Self {
        ParseError::Xml(err.to_string())
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MetricError {
    #[error("q-gram length must be at least 1, got {0}")]
    InvalidQ(usize),
    #[error("reference trace `{0}` has no additive events")]
    DegenerateReference(String),
    #[error("synthetic trace `{0}` has no paired reference")]
    UnpairedTrace(String),
    #[error("empty pairing")]
    EmptyPairing,
    #[error(transparent)]
    Stats(#[from] StatsError),
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum StatsError {
    #[error("sample is empty")]
    EmptySample,
    #[error("sample has too few observations or zero variance")]
    DegenerateSample,
    #[error("at least two groups are required")]
    TooFewGroups,
    #[error("confidence level must lie in (0, 1), got {0}")]
    InvalidConfidence(f64),
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RecommendError {
    #[error("context has no events")]
    EmptyContext,
    #[error("index has no traces")]
    EmptyIndex,
    #[error("training set is empty")]
    EmptyTrainingSet,
    #[error("invalid recommender config: {0}")]
    InvalidConfig(String),
    #[error("unsupported index format version {0}")]
    UnsupportedVersion(u32),
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EvalError {
    #[error("{traces} traces cannot be split into {folds} folds")]
    TooFewTraces { traces: usize, folds: usize },
    #[error("no test trace has ground truth to score")]
    NoScorableTraces,
    #[error("invalid configuration grid: {0}")]
    InvalidGrid(String),
    #[error("unknown configuration `{0}`")]
    UnknownConfig(String),
    #[error(transparent)]
    Recommend(#[from] RecommendError),
}
