//! Synthetic trace generation through few-shot prompting.
//!
//! A prompt holds task instructions, K demonstration (model, trace) pairs,
//! the target model and a note restating the output grammar. Responses are
//! cleaned, gated on syntactic correctness, and the accepted traces form a
//! synthetic trace set that can be mixed with human traces.

mod client;

use std::collections::BTreeMap;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use client::{
    extract_text, generate, CompletionRequest, GenerateOptions, Generated, HttpClient, HttpClientConfig, LlmClient,
    LlmError, MockClient, ReplayClient, RequestStyle, API_KEY_ENV,
};

use crate::error::TraceError;
use crate::formats::{parse_event_lines, ParseMode};
use crate::metrics::correctness;
use crate::trace::{Dataset, Origin, Trace, TraceSet};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SynthError {
    #[error("few-shot prompting needs at least one demonstration")]
    NoDemonstrations,
    #[error("demonstration for `{0}` is not a fully valid trace")]
    InvalidDemonstration(String),
    #[error("model `{0}` has an empty description")]
    EmptyDescription(String),
    #[error("metamodels differ: `{0}` vs `{1}`")]
    IncompatibleMetamodels(String, String),
    #[error("need {needed} {side} traces, only {available} available")]
    InsufficientTraces {
        side: &'static str,
        needed: usize,
        available: usize,
    },
    #[error("ratio {0} outside [0, 1]")]
    InvalidRatio(f64),
    #[error("gate threshold {0} outside (0, 1]")]
    InvalidThreshold(f64),
    #[error("prompt template is missing placeholder {0}")]
    TemplatePlaceholder(&'static str),
    #[error(transparent)]
    Trace(#[from] TraceError),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModelSummary {
    pub model_id: String,
    pub metamodel_id: String,
    /// Natural-language description of the model, such as an element
    /// inventory.
    pub description: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Demonstration {
    pub model: ModelSummary,
    pub trace_text: String,
}

impl Demonstration {
    pub fn validate(&self) -> Result<(), SynthError> {
        if self.trace_text.trim().is_empty() || correctness(&self.trace_text) < 1.0 {
            return Err(SynthError::InvalidDemonstration(self.model.model_id.clone()));
        }
        Ok(())
    }
}

pub const DEFAULT_INSTRUCTIONS: &str = "You are a designer working in a graphical modeling editor. \
For each model description, list the editing operations performed, in order, to build that model from an empty canvas. \
Follow the style of the examples.";

pub const DEFAULT_FORMAT_NOTE: &str = "Write one operation per line as: event <class> <featureName> <eventType>. \
<eventType> is one of ADD, REMOVE, SET, UNSET, ADD_MANY, REMOVE_MANY, MOVE. Do not write anything else.";

/// Layout with the four named placeholders.
pub const DEFAULT_TEMPLATE: &str = "{instructions}\n\n{demonstrations}{target}\n{format_note}\n";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PromptSpec {
    pub task_instructions: String,
    pub demonstrations: Vec<Demonstration>,
    pub target: ModelSummary,
    pub output_format_note: String,
}

impl PromptSpec {
    pub fn validate(&self) -> Result<(), SynthError> {
        if self.demonstrations.is_empty() {
            return Err(SynthError::NoDemonstrations);
        }
        for demo in &self.demonstrations {
            demo.validate()?;
        }
        if self.target.description.trim().is_empty() {
            return Err(SynthError::EmptyDescription(self.target.model_id.clone()));
        }
        Ok(())
    }
}

/// Prompt text template with `{instructions}`, `{demonstrations}`,
/// `{target}` and `{format_note}` placeholders.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PromptTemplate {
    text: String,
}

impl Default for PromptTemplate {
    fn default() -> Self {
        PromptTemplate {
            text: DEFAULT_TEMPLATE.to_string(),
        }
    }
}

const PLACEHOLDERS: [&str; 4] = ["{instructions}", "{demonstrations}", "{target}", "{format_note}"];

impl PromptTemplate {
    pub fn new(text: impl Into<String>) -> Result<Self, SynthError> {
        let text = text.into();
        for placeholder in ["{demonstrations}", "{target}"] {
            if !text.contains(placeholder) {
                return Err(SynthError::TemplatePlaceholder(placeholder));
            }
        }
        Ok(PromptTemplate { text })
    }

    /// Substitutes placeholders in one pass; inserted text is never
    /// rescanned.
    pub fn render(&self, values: &[(&str, &str); 4]) -> String {
        let mut out = String::with_capacity(self.text.len() * 2);
        let mut rest = self.text.as_str();
        while let Some(start) = rest.find('{') {
            out.push_str(&rest[..start]);
            let tail = &rest[start..];
            match PLACEHOLDERS.iter().position(|p| tail.starts_with(p)) {
                Some(i) => {
                    out.push_str(values[i].1);
                    rest = &tail[PLACEHOLDERS[i].len()..];
                }
                None => {
                    out.push('{');
                    rest = &tail[1..];
                }
            }
        }
        out.push_str(rest);
        out
    }
}

fn demonstration_block(model: &ModelSummary, trace_text: &str) -> String {
    let mut block = format!("MODEL: {}\nTRACE:\n{}", model.description.trim(), trace_text.trim_end());
    block.push_str("\n\n");
    block
}

pub fn build_prompt(spec: &PromptSpec) -> String {
    build_prompt_with(spec, &PromptTemplate::default())
}

pub fn build_prompt_with(spec: &PromptSpec, template: &PromptTemplate) -> String {
    let demonstrations: String = spec
        .demonstrations
        .iter()
        .map(|d| demonstration_block(&d.model, &d.trace_text))
        .collect();
    let target = format!("MODEL: {}\nTRACE:", spec.target.description.trim());
    template.render(&[
        ("instructions", spec.task_instructions.trim()),
        ("demonstrations", &demonstrations),
        ("target", &target),
        ("format_note", spec.output_format_note.trim()),
    ])
}

/// Normalizes a raw completion into event-line text.
///
/// Keeps only lines whose first token is `event` (any case, after trimming
/// whitespace and stray backticks), collapses whitespace runs, lower-cases
/// the keyword and upper-cases the event-type token.
pub fn clean(raw: &str) -> String {
    let mut out = String::new();
    for line in raw.lines() {
        let line = line.trim().trim_matches('`').trim();
        let mut tokens: Vec<String> = line.split_whitespace().map(str::to_string).collect();
        if tokens.first().map(|t| t.to_lowercase()) != Some("event".to_string()) {
            continue;
        }
        tokens[0] = "event".to_string();
        if let Some(kind) = tokens.get_mut(3) {
            *kind = kind.to_uppercase();
        }
        out.push_str(&tokens.join(" "));
        out.push('\n');
    }
    out
}

#[derive(Debug, Clone, PartialEq)]
pub enum GateOutcome {
    Accepted(Trace),
    Rejected(f64),
}

pub const DEFAULT_GATE_THRESHOLD: f64 = 0.99;

/// Admits cleaned text whose correctness reaches `threshold` and which
/// yields at least one event. Accepted traces carry a synthetic origin.
pub fn quality_gate(cleaned: &str, threshold: f64) -> Result<GateOutcome, SynthError> {
    if !(threshold > 0.0 && threshold <= 1.0) {
        return Err(SynthError::InvalidThreshold(threshold));
    }
    let score = correctness(cleaned);
    if score < threshold {
        return Ok(GateOutcome::Rejected(score));
    }
    match parse_event_lines(cleaned, ParseMode::Lenient) {
        Ok((trace, _)) => Ok(GateOutcome::Accepted(trace.with_origin(Origin::Synthetic(String::new())))),
        Err(_) => Ok(GateOutcome::Rejected(score)),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenerationRecord {
    pub model_id: String,
    pub attempt: u32,
    pub prompt: PromptSpec,
    pub raw_response: String,
    pub cleaned_text: String,
    pub cleaned_trace: Option<Trace>,
    pub correctness: f64,
    pub accepted: bool,
    pub generator_id: String,
    pub elapsed_ms: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone)]
pub struct SynthOptions {
    pub shots: usize,
    pub gate_threshold: f64,
    /// Extra attempts for a model whose output the gate rejected.
    pub retries_on_reject: u32,
    pub concurrency: usize,
    pub generate: GenerateOptions,
    pub template: PromptTemplate,
    pub instructions: String,
    pub format_note: String,
}

impl Default for SynthOptions {
    fn default() -> Self {
        SynthOptions {
            shots: 2,
            gate_threshold: DEFAULT_GATE_THRESHOLD,
            retries_on_reject: 0,
            concurrency: 1,
            generate: GenerateOptions::default(),
            template: PromptTemplate::default(),
            instructions: DEFAULT_INSTRUCTIONS.to_string(),
            format_note: DEFAULT_FORMAT_NOTE.to_string(),
        }
    }
}

/// Picks `shots` demonstrations for the model at `position`, rotating
/// through the pool and skipping demonstrations of the target model itself
/// whenever others are available.
pub fn select_demonstrations<'a>(
    demos: &'a [Demonstration],
    target: &ModelSummary,
    position: usize,
    shots: usize,
) -> Vec<&'a Demonstration> {
    let others: Vec<&Demonstration> = demos.iter().filter(|d| d.model.model_id != target.model_id).collect();
    let pool: Vec<&Demonstration> = if others.is_empty() { demos.iter().collect() } else { others };
    let take = shots.clamp(1, pool.len());
    (0..take).map(|i| pool[(position + i) % pool.len()]).collect()
}

pub fn synthetic_trace_id(model_id: &str) -> String {
    format!("syn-{model_id}")
}

/// Generates one synthetic trace per model.
///
/// Client failures are recorded and do not stop the batch. Records are
/// returned in model order, attempts in sequence.
pub fn synthesize_dataset(
    models: &[ModelSummary],
    demos: &[Demonstration],
    client: &dyn LlmClient,
    options: &SynthOptions,
) -> Result<(TraceSet, Vec<GenerationRecord>), SynthError> {
    if demos.is_empty() {
        return Err(SynthError::NoDemonstrations);
    }
    for demo in demos {
        demo.validate()?;
    }
    if !(options.gate_threshold > 0.0 && options.gate_threshold <= 1.0) {
        return Err(SynthError::InvalidThreshold(options.gate_threshold));
    }
    let metamodel_id = models.first().map(|m| m.metamodel_id.clone()).unwrap_or_default();
    if let Some(other) = models.iter().find(|m| m.metamodel_id != metamodel_id) {
        return Err(SynthError::IncompatibleMetamodels(metamodel_id, other.metamodel_id.clone()));
    }

    let slots: Mutex<Vec<Option<ModelOutcome>>> = Mutex::new(vec![None; models.len()]);
    let next = AtomicUsize::new(0);
    let workers = options.concurrency.clamp(1, models.len().max(1));
    std::thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| loop {
                let position = next.fetch_add(1, Ordering::SeqCst);
                let Some(model) = models.get(position) else { break };
                let outcome = synthesize_one(model, position, demos, client, options);
                slots.lock().expect("slot lock")[position] = Some(outcome);
            });
        }
    });

    let mut traces = Vec::new();
    let mut records = Vec::new();
    for slot in slots.into_inner().expect("slot lock") {
        let (trace, mut model_records) = slot.expect("every model processed");
        traces.extend(trace);
        records.append(&mut model_records);
    }
    let set = TraceSet::new(metamodel_id, traces);
    set.validate()?;
    Ok((set, records))
}

type ModelOutcome = (Option<Trace>, Vec<GenerationRecord>);

fn synthesize_one(
    model: &ModelSummary,
    position: usize,
    demos: &[Demonstration],
    client: &dyn LlmClient,
    options: &SynthOptions,
) -> ModelOutcome {
    let spec = PromptSpec {
        task_instructions: options.instructions.clone(),
        demonstrations: select_demonstrations(demos, model, position, options.shots)
            .into_iter()
            .cloned()
            .collect(),
        target: model.clone(),
        output_format_note: options.format_note.clone(),
    };
    let prompt = build_prompt_with(&spec, &options.template);
    let mut records = Vec::new();
    for attempt in 1..=(1 + options.retries_on_reject) {
        let request = CompletionRequest {
            prompt: prompt.clone(),
            tag: format!("{}#{attempt}", model.model_id),
        };
        let mut record = GenerationRecord {
            model_id: model.model_id.clone(),
            attempt,
            prompt: spec.clone(),
            raw_response: String::new(),
            cleaned_text: String::new(),
            cleaned_trace: None,
            correctness: 0.0,
            accepted: false,
            generator_id: client.id().to_string(),
            elapsed_ms: 0,
            error: None,
        };
        if spec.target.description.trim().is_empty() {
            record.error = Some(SynthError::EmptyDescription(model.model_id.clone()).to_string());
            records.push(record);
            return (None, records);
        }
        match generate(&request, client, &options.generate) {
            Err(err) => {
                record.error = Some(err.to_string());
                records.push(record);
                // Client failures are not retried as rejections.
                return (None, records);
            }
            Ok(generated) => {
                record.elapsed_ms = u64::try_from(generated.elapsed.as_millis()).unwrap_or(u64::MAX);
                record.cleaned_text = clean(&generated.text);
                record.raw_response = generated.text;
                record.correctness = correctness(&record.cleaned_text);
                // The threshold was validated above, so the gate cannot fail.
                if let Ok(GateOutcome::Accepted(trace)) = quality_gate(&record.cleaned_text, options.gate_threshold) {
                    let trace = Trace {
                        id: synthetic_trace_id(&model.model_id),
                        model_id: model.model_id.clone(),
                        origin: Origin::Synthetic(client.id().to_string()),
                        ..trace
                    };
                    record.accepted = true;
                    record.cleaned_trace = Some(trace.clone());
                    records.push(record);
                    return (Some(trace), records);
                }
                records.push(record);
            }
        }
    }
    (None, records)
}

/// Default dataset name for a mixing ratio, e.g. `Dm05` for 0.5.
pub fn mix_name(ratio: f64) -> String {
    format!("Dm{:02}", (ratio * 10.0).round() as u32)
}

/// Samples a dataset with the requested share of synthetic traces.
///
/// Without an explicit `size`, the result has min(|human|, |synthetic|)
/// traces (all human traces for ratio 0, all synthetic for ratio 1). The
/// synthetic count is round(ratio × size). Selection and final order come
/// from a seeded shuffle.
pub fn mix_datasets(
    human: &TraceSet,
    synthetic: &TraceSet,
    synthetic_ratio: f64,
    seed: u64,
    size: Option<usize>,
) -> Result<Dataset, SynthError> {
    if !(0.0..=1.0).contains(&synthetic_ratio) {
        return Err(SynthError::InvalidRatio(synthetic_ratio));
    }
    if human.metamodel_id != synthetic.metamodel_id {
        return Err(SynthError::IncompatibleMetamodels(
            human.metamodel_id.clone(),
            synthetic.metamodel_id.clone(),
        ));
    }
    let total = size.unwrap_or(if synthetic_ratio == 0.0 {
        human.len()
    } else if synthetic_ratio == 1.0 {
        synthetic.len()
    } else {
        human.len().min(synthetic.len())
    });
    let synthetic_count = (synthetic_ratio * total as f64).round() as usize;
    let human_count = total - synthetic_count;
    if synthetic_count > synthetic.len() {
        return Err(SynthError::InsufficientTraces {
            side: "synthetic",
            needed: synthetic_count,
            available: synthetic.len(),
        });
    }
    if human_count > human.len() {
        return Err(SynthError::InsufficientTraces {
            side: "human",
            needed: human_count,
            available: human.len(),
        });
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut pick = |set: &TraceSet, count: usize| -> Vec<Trace> {
        let mut idx: Vec<usize> = (0..set.len()).collect();
        idx.shuffle(&mut rng);
        idx.truncate(count);
        idx.sort_unstable();
        idx.into_iter().map(|i| set.traces[i].clone()).collect()
    };
    let mut traces = pick(human, human_count);
    traces.extend(pick(synthetic, synthetic_count));
    traces.shuffle(&mut rng);

    let trace_set = TraceSet::new(human.metamodel_id.clone(), traces);
    trace_set.validate()?;
    let dataset = Dataset::from_traces(mix_name(synthetic_ratio), trace_set, Some(seed));
    Ok(dataset)
}

/// Builds a demonstration pool from human traces whose model ids have a
/// summary.
pub fn demonstrations_from_traces(traces: &TraceSet, summaries: &BTreeMap<String, ModelSummary>) -> Vec<Demonstration> {
    traces
        .traces
        .iter()
        .filter_map(|t| {
            summaries.get(&t.model_id).map(|model| Demonstration {
                model: model.clone(),
                trace_text: t.render_text(),
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::formats::render_event_lines;

    fn model(id: &str) -> ModelSummary {
        ModelSummary {
            model_id: id.into(),
            metamodel_id: "hepsy".into(),
            description: format!("System {id} with two processes connected by a channel."),
        }
    }

    fn demo(id: &str) -> Demonstration {
        Demonstration {
            model: model(id),
            trace_text: "event System processes ADD\nevent Process name SET\nevent Process ports ADD\nevent Port name SET\nevent Channel width SET\n".into(),
        }
    }

    fn spec(k: usize) -> PromptSpec {
        PromptSpec {
            task_instructions: DEFAULT_INSTRUCTIONS.into(),
            demonstrations: (0..k).map(|i| demo(&format!("d{i}"))).collect(),
            target: model("target"),
            output_format_note: DEFAULT_FORMAT_NOTE.into(),
        }
    }

    #[test]
    fn prompt_layout() {
        let s = spec(1);
        let prompt = build_prompt(&s);
        assert_eq!(prompt.matches("MODEL:").count(), 2);
        assert_eq!(prompt.matches("TRACE:").count(), 2);
        assert!(prompt.starts_with(DEFAULT_INSTRUCTIONS));
        assert!(prompt.contains(s.demonstrations[0].trace_text.trim_end()));
        let target_at = prompt.find("MODEL: System target").unwrap();
        let demo_at = prompt.find("MODEL: System d0").unwrap();
        assert!(demo_at < target_at);
        assert!(prompt.find(DEFAULT_FORMAT_NOTE).unwrap() > target_at);
        assert_eq!(build_prompt(&s), prompt);
    }

    #[test]
    fn prompt_spec_needs_demonstrations() {
        assert_eq!(spec(0).validate(), Err(SynthError::NoDemonstrations));
        let mut bad = spec(1);
        bad.demonstrations[0].trace_text.push_str("oops\n");
        assert!(matches!(bad.validate(), Err(SynthError::InvalidDemonstration(_))));
        assert!(spec(2).validate().is_ok());
    }

    #[test]
    fn template_single_pass() {
        let template = PromptTemplate::new("A {demonstrations} B {target} {unknown}").unwrap();
        let out = template.render(&[
            ("instructions", "i"),
            ("demonstrations", "{target}"),
            ("target", "T"),
            ("format_note", "f"),
        ]);
        assert_eq!(out, "A {target} B T {unknown}");
        assert!(PromptTemplate::new("no placeholders").is_err());
    }

    #[test]
    fn cleaning_rules() {
        assert_eq!(clean("```\nevent A b SET\n```\nHope this helps!"), "event A b SET\n");
        assert_eq!(clean("Event  A   b  set"), "event A b SET\n");
        assert_eq!(clean("Sure! Here is what you asked for.\nThanks."), "");
        assert_eq!(clean("  `event A b add`  \n- event X y SET"), "event A b ADD\n");
    }

    #[test]
    fn gate_outcomes() {
        match quality_gate("event A b SET\nevent A c ADD\n", 0.99).unwrap() {
            GateOutcome::Accepted(trace) => {
                assert_eq!(trace.events.len(), 2);
                assert!(trace.origin.is_synthetic());
            }
            other => panic!("{other:?}"),
        }
        assert_eq!(
            quality_gate("event A b SET\nevent A c\n", 0.99).unwrap(),
            GateOutcome::Rejected(0.5)
        );
        assert_eq!(quality_gate("", 0.99).unwrap(), GateOutcome::Rejected(1.0));
        assert!(quality_gate("event A b SET", 0.0).is_err());
    }

    #[test]
    fn synthesize_three_models() {
        let models = [model("m1"), model("m2"), model("m3")];
        let demos = [demo("d1"), demo("d2")];
        let client = MockClient::new(5);
        let (set, records) = synthesize_dataset(&models, &demos, &client, &SynthOptions::default()).unwrap();
        assert_eq!(set.len(), 3);
        assert_eq!(records.len(), 3);
        assert!(records.iter().all(|r| r.accepted));
        let ids: Vec<_> = set.traces.iter().map(|t| t.id.as_str()).collect();
        assert_eq!(ids, vec!["syn-m1", "syn-m2", "syn-m3"]);
        assert!(set.traces.iter().all(|t| t.origin == Origin::Synthetic("mock".into())));
    }

    #[test]
    fn synthesize_with_one_garbage_model() {
        let models = [model("m1"), model("m2"), model("m3")];
        let demos = [demo("d1")];
        let client = MockClient::new(5).with_garbage_for("m2#");
        let (set, records) = synthesize_dataset(&models, &demos, &client, &SynthOptions::default()).unwrap();
        assert_eq!(set.len(), 2);
        let rejected: Vec<_> = records.iter().filter(|r| !r.accepted).collect();
        assert_eq!(rejected.len(), 1);
        assert_eq!(rejected[0].model_id, "m2");
    }

    #[test]
    fn concurrency_preserves_order_and_output() {
        let models: Vec<_> = (0..8).map(|i| model(&format!("m{i}"))).collect();
        let demos = [demo("d1"), demo("d2"), demo("d3")];
        let client = MockClient::new(11);
        let serial = synthesize_dataset(&models, &demos, &client, &SynthOptions::default()).unwrap();
        let parallel = synthesize_dataset(
            &models,
            &demos,
            &client,
            &SynthOptions {
                concurrency: 4,
                ..SynthOptions::default()
            },
        )
        .unwrap();
        assert_eq!(serial.0, parallel.0);
        let order: Vec<_> = parallel.1.iter().map(|r| r.model_id.clone()).collect();
        let expected: Vec<_> = models.iter().map(|m| m.model_id.clone()).collect();
        assert_eq!(order, expected);
    }

    #[test]
    fn accepted_traces_revalidate() {
        let models: Vec<_> = (0..5).map(|i| model(&format!("m{i}"))).collect();
        let demos = [demo("d1"), demo("d2")];
        let (set, _) = synthesize_dataset(&models, &demos, &MockClient::new(3), &SynthOptions::default()).unwrap();
        for trace in &set.traces {
            assert!(correctness(&render_event_lines(trace)) >= DEFAULT_GATE_THRESHOLD);
        }
    }

    #[test]
    fn demo_selection_skips_target() {
        let demos = [demo("a"), demo("b"), demo("c")];
        let picked = select_demonstrations(&demos, &model("b"), 0, 2);
        let ids: Vec<_> = picked.iter().map(|d| d.model.model_id.as_str()).collect();
        assert_eq!(ids, vec!["a", "c"]);
        let picked = select_demonstrations(&demos[..1], &model("a"), 3, 2);
        assert_eq!(picked.len(), 1);
    }

    fn set_of(prefix: &str, n: usize, origin: Origin) -> TraceSet {
        let traces = (0..n)
            .map(|i| {
                let (t, _) = parse_event_lines("event A b SET\n", ParseMode::Strict).unwrap();
                Trace {
                    id: format!("{prefix}{i}"),
                    origin: origin.clone(),
                    ..t
                }
            })
            .collect();
        TraceSet::new("hepsy", traces)
    }

    #[test]
    fn mix_half_and_half() {
        let human = set_of("h", 10, Origin::Human);
        let synthetic = set_of("s", 10, Origin::Synthetic("mock".into()));
        let ds = mix_datasets(&human, &synthetic, 0.5, 7, None).unwrap();
        assert_eq!(ds.trace_set.len(), 10);
        assert_eq!(ds.trace_set.synthetic_count(), 5);
        assert_eq!(ds.synthetic_ratio, 0.5);
        assert_eq!(ds.name, "Dm05");
        assert_eq!(ds, mix_datasets(&human, &synthetic, 0.5, 7, None).unwrap());
        assert_ne!(ds.trace_set, mix_datasets(&human, &synthetic, 0.5, 8, None).unwrap().trace_set);
    }

    #[test]
    fn mix_pure_human() {
        let human = set_of("h", 6, Origin::Human);
        let synthetic = set_of("s", 3, Origin::Synthetic("mock".into()));
        let ds = mix_datasets(&human, &synthetic, 0.0, 1, None).unwrap();
        assert_eq!(ds.trace_set.len(), 6);
        assert_eq!(ds.trace_set.synthetic_count(), 0);
    }

    #[test]
    fn mix_errors() {
        let human = set_of("h", 4, Origin::Human);
        let synthetic = set_of("s", 2, Origin::Synthetic("mock".into()));
        assert!(matches!(
            mix_datasets(&human, &synthetic, 0.8, 1, Some(4)),
            Err(SynthError::InsufficientTraces { side: "synthetic", .. })
        ));
        let other = TraceSet::new("other", synthetic.traces.clone());
        assert!(matches!(
            mix_datasets(&human, &other, 0.5, 1, None),
            Err(SynthError::IncompatibleMetamodels(..))
        ));
        assert!(matches!(
            mix_datasets(&human, &synthetic, 1.5, 1, None),
            Err(SynthError::InvalidRatio(_))
        ));
    }
}
