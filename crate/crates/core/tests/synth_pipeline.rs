mod support;

use std::collections::{BTreeMap, BTreeSet};
use std::time::Duration;

use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use traceforge_core::formats::{parse_event_lines, render_event_lines, write_xes};
use traceforge_core::metrics::correctness;
use traceforge_core::synth::{
    build_prompt, clean, mix_datasets, quality_gate, synthesize_dataset, Demonstration, GateOutcome, GenerateOptions,
    MockClient, ModelSummary, PromptSpec, ReplayClient, SynthOptions, DEFAULT_FORMAT_NOTE, DEFAULT_INSTRUCTIONS,
};
use traceforge_core::{Origin, ParseMode, Trace, TraceSet};

use support::{fixture_path, random_trace_set};

fn fixtures() -> (Vec<ModelSummary>, Vec<Demonstration>) {
    let read = |name: &str| std::fs::read_to_string(fixture_path(name)).unwrap();
    (serde_json::from_str(&read("models.json")).unwrap(), serde_json::from_str(&read("demos.json")).unwrap())
}

fn raw_line() -> impl Strategy<Value = String> {
    prop_oneof![
        "(event|Event|EVENT) [A-Z][a-z]{0,5} +[a-z]{1,6}  *(set|ADD|Move|remove_many|bogus)",
        "```[a-z]{0,6}",
        "[ \t]*`event [A-Z][a-z]{1,4} [a-z]{1,4} (add|SET)`[ \t]*",
        "[A-Za-z ,.!]{0,30}",
        "event",
    ]
}

proptest! {
    #[test]
    fn clean_is_idempotent(lines in proptest::collection::vec(raw_line(), 0..12)) {
        let raw = lines.join("\n");
        let once = clean(&raw);
        prop_assert_eq!(clean(&once), once.clone());
        for line in once.lines() {
            prop_assert!(line.starts_with("event"));
            prop_assert!(!line.contains("  "));
        }
    }

    #[test]
    fn accepted_traces_revalidate(lines in proptest::collection::vec(raw_line(), 0..12)) {
        let cleaned = clean(&lines.join("\n"));
        if let GateOutcome::Accepted(trace) = quality_gate(&cleaned, 0.99).unwrap() {
            prop_assert!(correctness(&cleaned) >= 0.99);
            prop_assert!(correctness(&render_event_lines(&trace)) >= 0.99);
            prop_assert!(trace.origin.is_synthetic());
        }
    }

    #[test]
    fn mix_respects_ratio_and_ids(seed in any::<u64>(), tenths in 0u32..=10) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let relabel = |set: TraceSet, prefix: &str, origin: Origin| {
            let traces = set
                .traces
                .into_iter()
                .enumerate()
                .map(|(i, t)| Trace { id: format!("{prefix}{i}"), origin: origin.clone(), ..t })
                .collect();
            TraceSet::new("mm", traces)
        };
        let human = relabel(random_trace_set(&mut rng, 12, 3), "h", Origin::Human);
        let synthetic = relabel(random_trace_set(&mut rng, 12, 3), "s", Origin::Synthetic("mock".into()));
        let ratio = tenths as f64 / 10.0;
        match mix_datasets(&human, &synthetic, ratio, seed, None) {
            Ok(ds) => {
                let ids: BTreeSet<&str> = ds.trace_set.traces.iter().map(|t| t.id.as_str()).collect();
                prop_assert_eq!(ids.len(), ds.trace_set.len());
                let expected = (ratio * ds.trace_set.len() as f64).round() as usize;
                prop_assert!(ds.trace_set.synthetic_count().abs_diff(expected) <= 1);
                prop_assert!(ds.validate().is_ok());
                prop_assert_eq!(ds, mix_datasets(&human, &synthetic, ratio, seed, None).unwrap());
            }
            Err(_) => prop_assert!(human.is_empty() || synthetic.is_empty()),
        }
    }
}

#[test]
fn prompt_contains_demonstrations_verbatim() {
    let (models, demos) = fixtures();
    let spec = PromptSpec {
        task_instructions: DEFAULT_INSTRUCTIONS.into(),
        demonstrations: demos[..1].to_vec(),
        target: models[0].clone(),
        output_format_note: DEFAULT_FORMAT_NOTE.into(),
    };
    spec.validate().unwrap();
    let prompt = build_prompt(&spec);
    assert_eq!(prompt.matches("MODEL:").count(), 2);
    assert!(prompt.contains(demos[0].trace_text.trim_end()));
    assert!(prompt.trim_end().ends_with(DEFAULT_FORMAT_NOTE));
    assert_eq!(prompt, build_prompt(&spec.clone()));
}

#[test]
fn mock_generation_is_reproducible() {
    let (models, demos) = fixtures();
    let run = |concurrency: usize| {
        let options = SynthOptions { concurrency, ..SynthOptions::default() };
        let (set, records) = synthesize_dataset(&models, &demos, &MockClient::new(42), &options).unwrap();
        (write_xes(&set), records.into_iter().map(|r| (r.model_id, r.raw_response, r.accepted)).collect::<Vec<_>>())
    };
    let first = run(1);
    assert_eq!(first, run(1));
    assert_eq!(first, run(4));
    let other = synthesize_dataset(&models, &demos, &MockClient::new(43), &SynthOptions::default()).unwrap();
    assert_ne!(first.0, write_xes(&other.0));
}

#[test]
fn replayed_responses_drive_the_gate() {
    let (models, demos) = fixtures();
    let models = &models[..3];
    let mut responses = BTreeMap::new();
    responses.insert("m01".to_string(), format!("Sure:\n```\n{}```", demos[0].trace_text));
    responses.insert("m02".to_string(), "I cannot help with that.".to_string());
    responses.insert("m03".to_string(), "event System name SET\nevent Process name\n".to_string());
    let (set, records) = synthesize_dataset(models, &demos, &ReplayClient::new(responses), &SynthOptions::default()).unwrap();
    assert_eq!(set.len(), 1);
    assert_eq!(set.traces[0].id, "syn-m01");
    assert_eq!(set.traces[0].model_id, "m01");
    let expected = parse_event_lines(&demos[0].trace_text, ParseMode::Strict).unwrap().0;
    assert_eq!(set.traces[0].tokens(), expected.tokens());
    let accepted: Vec<bool> = records.iter().map(|r| r.accepted).collect();
    assert_eq!(accepted, vec![true, false, false]);
    assert_eq!(records[2].correctness, 0.5);
}

#[test]
fn client_timeouts_are_recorded_per_model() {
    let (models, demos) = fixtures();
    let client = MockClient::new(1).with_latency(Duration::from_millis(50));
    let options = SynthOptions {
        generate: GenerateOptions { timeout: Duration::from_millis(5), ..GenerateOptions::default() },
        ..SynthOptions::default()
    };
    let (set, records) = synthesize_dataset(&models[..2], &demos, &client, &options).unwrap();
    assert!(set.is_empty());
    assert_eq!(records.len(), 2);
    assert!(records.iter().all(|r| r.error.as_deref().is_some_and(|e| e.contains("timed out"))));
}

#[test]
fn gate_examples() {
    assert!(matches!(quality_gate("event A b SET\n", 0.99).unwrap(), GateOutcome::Accepted(_)));
    assert_eq!(quality_gate("event A b SET\nhello\n", 0.99).unwrap(), GateOutcome::Rejected(0.5));
    assert_eq!(quality_gate("", 0.99).unwrap(), GateOutcome::Rejected(1.0));
    assert_eq!(clean("```\nevent A b SET\n```\nHope this helps!"), "event A b SET\n");
}
