use std::path::Path;

use serde::Serialize;
use thiserror::Error;
use traceforge_core::synth::{LlmError, SynthError};
use traceforge_core::{EvalError, MetricError, ParseError, RecommendError, StatsError, TraceError};

/// Exit code 2: the inputs were unusable. Exit code 1: the run failed.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("{message}")]
    Input { kind: &'static str, message: String },
    #[error("{message}")]
    Runtime { kind: &'static str, message: String },
}

impl CliError {
    pub fn input(kind: &'static str, message: impl Into<String>) -> Self {
        CliError::Input {
            kind,
            message: message.into(),
        }
    }

    pub fn runtime(kind: &'static str, message: impl Into<String>) -> Self {
        CliError::Runtime {
            kind,
            message: message.into(),
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Input { .. } => 2,
            CliError::Runtime { .. } => 1,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            CliError::Input { kind, .. } | CliError::Runtime { kind, .. } => kind,
        }
    }

    pub fn read(path: &Path, err: std::io::Error) -> Self {
        CliError::input("io", format!("cannot read {}: {err}", path.display()))
    }

    pub fn write(path: &Path, err: impl std::fmt::Display) -> Self {
        CliError::runtime("io", format!("cannot write {}: {err}", path.display()))
    }

    pub fn to_json(&self) -> String {
        #[derive(Serialize)]
        struct Body<'a> {
            error: &'a str,
            message: String,
            exit_code: i32,
        }
        serde_json::to_string(&Body {
            error: self.kind(),
            message: self.to_string(),
            exit_code: self.exit_code(),
        })
        .expect("error body serializes")
    }
}

impl From<ParseError> for CliError {
    fn from(err: ParseError) -> Self {
        CliError::input("parse", err.to_string())
    }
}

impl From<TraceError> for CliError {
    fn from(err: TraceError) -> Self {
        CliError::input("trace", err.to_string())
    }
}

impl From<MetricError> for CliError {
    fn from(err: MetricError) -> Self {
        CliError::input("metrics", err.to_string())
    }
}

impl From<StatsError> for CliError {
    fn from(err: StatsError) -> Self {
        CliError::input("stats", err.to_string())
    }
}

impl From<RecommendError> for CliError {
    fn from(err: RecommendError) -> Self {
        CliError::input("recommend", err.to_string())
    }
}

impl From<EvalError> for CliError {
    fn from(err: EvalError) -> Self {
        match err {
            EvalError::NoScorableTraces => CliError::runtime("eval", err.to_string()),
            other => CliError::input("eval", other.to_string()),
        }
    }
}

impl From<SynthError> for CliError {
    fn from(err: SynthError) -> Self {
        CliError::input("synth", err.to_string())
    }
}

impl From<LlmError> for CliError {
    fn from(err: LlmError) -> Self {
        CliError::runtime("llm", err.to_string())
    }
}

impl From<serde_json::Error> for CliError {
    fn from(err: serde_json::Error) -> Self {
        CliError::input("json", err.to_string())
    }
}
