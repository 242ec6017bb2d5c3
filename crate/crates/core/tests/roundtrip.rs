mod support;

use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use traceforge_core::formats::{
    parse_event_lines, parse_xes, parse_xes_with, read_dataset_xes, render_event_lines, write_dataset_xes, write_xes,
    write_xes_with,
};
use traceforge_core::{Dataset, ParseMode, Trace, XesKeys};

use support::{event_keys, random_events, random_trace_set};

fn assert_same_sets(a: &traceforge_core::TraceSet, b: &traceforge_core::TraceSet) {
    assert_eq!(a.metamodel_id, b.metamodel_id);
    assert_eq!(a.len(), b.len());
    for (x, y) in a.traces.iter().zip(&b.traces) {
        assert_eq!(x.id, y.id);
        assert_eq!(x.model_id, y.model_id);
        assert_eq!(x.origin, y.origin);
        assert_eq!(event_keys(x), event_keys(y));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn lines_render_then_parse(seed in any::<u64>(), len in 1usize..40) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let trace = Trace::new("trace-1", random_events(&mut rng, len));
        let text = render_event_lines(&trace);
        prop_assert_eq!(text.lines().count(), len);
        let (parsed, report) = parse_event_lines(&text, ParseMode::Strict).unwrap();
        prop_assert_eq!(&parsed, &trace);
        prop_assert_eq!(report.accepted_events, len);
        prop_assert!(report.rejected_lines.is_empty());
        prop_assert_eq!(render_event_lines(&parsed), text);
    }

    #[test]
    fn lines_accept_any_type_case_and_spacing(seed in any::<u64>(), len in 1usize..20) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let trace = Trace::new("trace-1", random_events(&mut rng, len));
        let sloppy: String = trace
            .events
            .iter()
            .map(|e| format!("event\t{}   {} {}\n\n", e.class_name(), e.feature_name(), e.event_type().as_str().to_lowercase()))
            .collect();
        let (parsed, _) = parse_event_lines(&sloppy, ParseMode::Strict).unwrap();
        prop_assert_eq!(parsed, trace);
    }

    #[test]
    fn xes_round_trip(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let set = random_trace_set(&mut rng, 6, 15);
        let (back, report) = parse_xes(&write_xes(&set), ParseMode::Strict).unwrap();
        assert_same_sets(&set, &back);
        prop_assert!(report.rejected_lines.is_empty());
        prop_assert_eq!(report.accepted_events, set.event_count());
    }

    #[test]
    fn xes_round_trip_with_remapped_keys(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let set = random_trace_set(&mut rng, 4, 10);
        let keys = XesKeys {
            class: "mer:class".into(),
            feature: "mer:feature".into(),
            event_type: "mer:kind".into(),
            ..XesKeys::default()
        };
        let (back, _) = parse_xes_with(&write_xes_with(&set, &keys), ParseMode::Strict, &keys).unwrap();
        assert_same_sets(&set, &back);
    }

    #[test]
    fn dataset_metadata_round_trip(seed in any::<u64>(), ds_seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let set = random_trace_set(&mut rng, 6, 5);
        let dataset = Dataset::from_traces("Dm05", set, Some(ds_seed));
        let bytes = write_dataset_xes(&dataset, &XesKeys::default());
        let (back, _) = read_dataset_xes(&bytes, ParseMode::Strict, &XesKeys::default(), "unused").unwrap();
        prop_assert_eq!(&back.name, "Dm05");
        prop_assert_eq!(back.seed, Some(ds_seed));
        prop_assert_eq!(back.synthetic_ratio, dataset.synthetic_ratio);
        assert_same_sets(&dataset.trace_set, &back.trace_set);
    }

    #[test]
    fn lenient_xes_never_fails_on_well_formed_xml(
        events in proptest::collection::vec(
            (proptest::option::of("[A-Za-z]{1,6}"), proptest::option::of("[a-z ]{0,6}"), proptest::option::of("(ADD|set|MOVE|bogus|)"), proptest::option::of("(2024-01-01T00:00:00Z|yesterday)")),
            0..12,
        ),
    ) {
        let mut doc = String::from("<?xml version=\"1.0\"?>\n<log>\n<trace>\n");
        let mut well_formed = 0;
        for (class, feature, kind, stamp) in &events {
            doc.push_str("<event>");
            for (key, value) in [("class", class), ("featureName", feature), ("eventType", kind)] {
                if let Some(v) = value {
                    doc.push_str(&format!("<string key=\"{key}\" value=\"{v}\"/>"));
                }
            }
            if let Some(s) = stamp {
                doc.push_str(&format!("<date key=\"time:timestamp\" value=\"{s}\"/>"));
            }
            doc.push_str("</event>\n");
            well_formed += 1;
        }
        doc.push_str("</trace>\n</log>\n");
        let (set, report) = parse_xes(doc.as_bytes(), ParseMode::Lenient).unwrap();
        prop_assert!(set.event_count() <= well_formed);
        let lines: Vec<usize> = report.rejected_lines.iter().map(|r| r.line).collect();
        prop_assert!(lines.windows(2).all(|w| w[0] < w[1]));
    }
}

#[test]
fn bundled_fixture_round_trips() {
    let bytes = std::fs::read(support::fixture_path("human.xes")).unwrap();
    let (set, report) = parse_xes(&bytes, ParseMode::Strict).unwrap();
    assert_eq!(set.len(), 20);
    assert_eq!(set.metamodel_id, "hepsy-mini");
    assert_eq!(report.accepted_events, set.event_count());
    assert!(set.traces.iter().all(|t| t.events.iter().all(|e| e.timestamp().is_some())));
    let (back, _) = parse_xes(&write_xes(&set), ParseMode::Strict).unwrap();
    assert_same_sets(&set, &back);
}
