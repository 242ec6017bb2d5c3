//! Reference implementations and generators shared by the integration and
//! acceptance tests. Everything here is written for clarity over speed.
#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};

use chrono::{DateTime, Duration, TimeZone, Utc};
use rand::seq::SliceRandom;
use rand::Rng;
use traceforge_core::recommender::ScoredOperation;
use traceforge_core::{
    EventType, FeatureKind, MetamodelSchema, ModelingEvent, OpKind, OperationTriple, Origin, Trace, TraceSet,
};

// ---------------------------------------------------------------------------
// Similarity oracles

fn is_subsequence<T: PartialEq>(needle: &[&T], hay: &[T]) -> bool {
    let mut it = hay.iter();
    needle.iter().all(|n| it.any(|h| h == *n))
}

/// Longest common subsequence length by enumerating every subsequence of
/// the shorter input.
pub fn lcs_bruteforce<T: PartialEq>(a: &[T], b: &[T]) -> usize {
    let (short, long) = if a.len() <= b.len() { (a, b) } else { (b, a) };
    assert!(short.len() <= 16, "brute force limited to short inputs");
    let mut best = 0;
    for mask in 0u32..(1 << short.len()) {
        let ones = mask.count_ones() as usize;
        if ones <= best {
            continue;
        }
        let pick: Vec<&T> = (0..short.len()).filter(|i| mask & (1 << i) != 0).map(|i| &short[i]).collect();
        if is_subsequence(&pick, long) {
            best = ones;
        }
    }
    best
}

pub fn lcs_similarity_oracle<T: PartialEq>(a: &[T], b: &[T]) -> f64 {
    let longest = a.len().max(b.len());
    if longest == 0 {
        return 1.0;
    }
    lcs_bruteforce(a, b) as f64 / longest as f64
}

/// Jaro similarity following the textbook statement: matches within
/// ⌊max/2⌋ − 1 positions, t = half the out-of-order matched pairs.
pub fn jaro_oracle<T: PartialEq>(a: &[T], b: &[T]) -> f64 {
    if a.is_empty() && b.is_empty() {
        return 1.0;
    }
    if a.is_empty() || b.is_empty() {
        return 0.0;
    }
    let window = (a.len().max(b.len()) / 2).saturating_sub(1);
    let mut b_used = vec![false; b.len()];
    let mut a_matched = Vec::new();
    for (i, x) in a.iter().enumerate() {
        let lo = i.saturating_sub(window);
        let hi = (i + window).min(b.len() - 1);
        if lo > hi {
            continue;
        }
        if let Some(j) = (lo..=hi).find(|&j| !b_used[j] && b[j] == *x) {
            b_used[j] = true;
            a_matched.push(x);
        }
    }
    let m = a_matched.len();
    if m == 0 {
        return 0.0;
    }
    let b_matched: Vec<&T> = b.iter().zip(&b_used).filter(|(_, used)| **used).map(|(y, _)| y).collect();
    let half_transpositions = a_matched.iter().zip(&b_matched).filter(|(x, y)| **x != **y).count() as f64 / 2.0;
    let m = m as f64;
    (m / a.len() as f64 + m / b.len() as f64 + (m - half_transpositions) / m) / 3.0
}

fn counts<T: Ord + Clone>(xs: &[T]) -> BTreeMap<T, u64> {
    let mut out = BTreeMap::new();
    for x in xs {
        *out.entry(x.clone()).or_insert(0) += 1;
    }
    out
}

pub fn cosine_oracle<T: Ord + Clone>(a: &[T], b: &[T]) -> f64 {
    match (a.is_empty(), b.is_empty()) {
        (true, true) => return 1.0,
        (true, false) | (false, true) => return 0.0,
        _ => {}
    }
    let (ca, cb) = (counts(a), counts(b));
    let dot: u64 = ca.iter().map(|(k, v)| v * cb.get(k).copied().unwrap_or(0)).sum();
    let na: u64 = ca.values().map(|v| v * v).sum();
    let nb: u64 = cb.values().map(|v| v * v).sum();
    dot as f64 / ((na as f64).sqrt() * (nb as f64).sqrt())
}

pub fn jaccard_oracle<T: Ord + Clone>(a: &[T], b: &[T]) -> f64 {
    let sa: BTreeSet<T> = a.iter().cloned().collect();
    let sb: BTreeSet<T> = b.iter().cloned().collect();
    if sa.is_empty() && sb.is_empty() {
        return 1.0;
    }
    sa.intersection(&sb).count() as f64 / sa.union(&sb).count() as f64
}

pub fn dice_oracle<T: Ord + Clone>(a: &[T], b: &[T]) -> f64 {
    let sa: BTreeSet<T> = a.iter().cloned().collect();
    let sb: BTreeSet<T> = b.iter().cloned().collect();
    if sa.is_empty() && sb.is_empty() {
        return 1.0;
    }
    2.0 * sa.intersection(&sb).count() as f64 / (sa.len() + sb.len()) as f64
}

pub fn qgram_oracle<T: Ord + Clone>(a: &[T], b: &[T], q: usize) -> f64 {
    let grams = |xs: &[T]| -> Vec<Vec<T>> {
        if xs.len() < q {
            Vec::new()
        } else {
            xs.windows(q).map(<[T]>::to_vec).collect()
        }
    };
    let (ga, gb) = (grams(a), grams(b));
    let total = ga.len() + gb.len();
    if total == 0 {
        return 1.0;
    }
    let (ca, cb) = (counts(&ga), counts(&gb));
    let keys: BTreeSet<&Vec<T>> = ca.keys().chain(cb.keys()).collect();
    let distance: u64 = keys
        .into_iter()
        .map(|k| ca.get(k).copied().unwrap_or(0).abs_diff(cb.get(k).copied().unwrap_or(0)))
        .sum();
    1.0 - distance as f64 / total as f64
}

// ---------------------------------------------------------------------------
// Quadrature oracle for distribution functions

fn simpson(a: f64, b: f64, fa: f64, fm: f64, fb: f64) -> f64 {
    (b - a) / 6.0 * (fa + 4.0 * fm + fb)
}

#[allow(clippy::too_many_arguments)]
fn adaptive(f: &dyn Fn(f64) -> f64, a: f64, b: f64, fa: f64, fm: f64, fb: f64, whole: f64, eps: f64, depth: u32) -> f64 {
    let m = 0.5 * (a + b);
    let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
    let (flm, frm) = (f(lm), f(rm));
    let left = simpson(a, m, fa, flm, fm);
    let right = simpson(m, b, fm, frm, fb);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * eps {
        return left + right + delta / 15.0;
    }
    adaptive(f, a, m, fa, flm, fm, left, eps / 2.0, depth - 1) + adaptive(f, m, b, fm, frm, fb, right, eps / 2.0, depth - 1)
}

pub fn integrate(f: &dyn Fn(f64) -> f64, a: f64, b: f64, eps: f64) -> f64 {
    let (fa, fm, fb) = (f(a), f(0.5 * (a + b)), f(b));
    let whole = simpson(a, b, fa, fm, fb);
    adaptive(f, a, b, fa, fm, fb, whole, eps, 50)
}

/// Student t CDF from the unnormalized density, integrated over
/// θ = atan(t) so the infinite tail maps onto a finite interval.
pub fn t_cdf_quadrature(x: f64, df: f64) -> f64 {
    let g = |theta: f64| -> f64 {
        let t = theta.tan();
        let c = theta.cos();
        if c <= 0.0 {
            return 0.0;
        }
        (-(df + 1.0) / 2.0 * (t * t / df).ln_1p()).exp() / (c * c)
    };
    let half = std::f64::consts::FRAC_PI_2;
    let total = integrate(&g, 0.0, half, 1e-14);
    let tail = integrate(&g, x.abs().atan(), half, 1e-14);
    let upper = 0.5 * tail / total;
    if x >= 0.0 {
        1.0 - upper
    } else {
        upper
    }
}

/// F CDF from the unnormalized density under x = tan²θ.
pub fn f_cdf_quadrature(x: f64, d1: f64, d2: f64) -> f64 {
    let h = |theta: f64| -> f64 {
        let t = theta.tan();
        let c = theta.cos();
        if t <= 0.0 {
            return if d1 == 1.0 { 2.0 } else { 0.0 };
        }
        if c <= 0.0 {
            return 0.0;
        }
        let log = std::f64::consts::LN_2 + (d1 - 1.0) * t.ln() - 2.0 * c.ln()
            - (d1 + d2) / 2.0 * (d1 * t * t / d2).ln_1p();
        log.exp()
    };
    let half = std::f64::consts::FRAC_PI_2;
    let total = integrate(&h, 0.0, half, 1e-14);
    integrate(&h, 0.0, x.sqrt().atan(), 1e-14) / total
}

// ---------------------------------------------------------------------------
// Recommender oracle

fn labels(events: &[ModelingEvent]) -> Vec<String> {
    let tokens: Vec<String> = events
        .iter()
        .map(|e| format!("{}.{}.{}", e.class_name(), e.feature_name(), e.event_type()))
        .collect();
    let mut out = tokens.clone();
    for i in 0..tokens.len() {
        let mut around = Vec::new();
        if i > 0 {
            around.push(tokens[i - 1].clone());
        }
        if i + 1 < tokens.len() {
            around.push(tokens[i + 1].clone());
        }
        around.sort();
        out.push(format!("{}({})", tokens[i], around.join(",")));
    }
    out
}

/// Cosine of label counts, computed on exact integer dot products.
pub fn kernel_oracle(a: &[ModelingEvent], b: &[ModelingEvent]) -> f64 {
    let (ca, cb) = (counts(&labels(a)), counts(&labels(b)));
    let na: u64 = ca.values().map(|v| v * v).sum();
    let nb: u64 = cb.values().map(|v| v * v).sum();
    if na == 0 || nb == 0 {
        return if na == nb { 1.0 } else { 0.0 };
    }
    let dot: u64 = ca.iter().map(|(k, v)| v * cb.get(k).copied().unwrap_or(0)).sum();
    (dot as f64 / (na as f64 * nb as f64).sqrt()).clamp(0.0, 1.0)
}

fn kind_of(schema: &MetamodelSchema, class: &str, feature: &str) -> Option<OpKind> {
    match schema.feature_kind(class, feature)? {
        FeatureKind::Reference => Some(OpKind::ClassOps),
        FeatureKind::Attribute => Some(OpKind::AttributeOps),
    }
}

/// Scores every training trace, keeps the `k` best with positive
/// similarity (ties to the smaller id), and ranks every unseen operation of
/// the requested kind by summed similarity × frequency.
pub fn recommend_oracle(
    context: &[ModelingEvent],
    training: &[Trace],
    schema: &MetamodelSchema,
    kind: OpKind,
    k: usize,
    cutoff: usize,
) -> Vec<ScoredOperation> {
    let mut pool: Vec<(f64, &Trace)> = training
        .iter()
        .filter(|t| !t.events.is_empty())
        .map(|t| (kernel_oracle(context, &t.events), t))
        .filter(|(s, _)| *s > 0.0)
        .collect();
    let mut chosen: Vec<(f64, &Trace)> = Vec::new();
    while chosen.len() < k && !pool.is_empty() {
        let mut best = 0;
        for i in 1..pool.len() {
            let (s, t) = pool[i];
            let (bs, bt) = pool[best];
            if s > bs || (s == bs && t.id < bt.id) {
                best = i;
            }
        }
        chosen.push(pool.remove(best));
    }
    let seen: BTreeSet<OperationTriple> = context.iter().map(|e| e.triple()).collect();
    let mut scores: BTreeMap<OperationTriple, f64> = BTreeMap::new();
    for (sim, trace) in &chosen {
        let mut freq: BTreeMap<OperationTriple, u32> = BTreeMap::new();
        for e in &trace.events {
            if kind_of(schema, e.class_name(), e.feature_name()) == Some(kind) && !seen.contains(&e.triple()) {
                *freq.entry(e.triple()).or_insert(0) += 1;
            }
        }
        for (triple, n) in freq {
            *scores.entry(triple).or_insert(0.0) += sim * n as f64;
        }
    }
    let mut ranked: Vec<(OperationTriple, f64)> = scores.into_iter().collect();
    let mut out = Vec::new();
    while out.len() < cutoff && !ranked.is_empty() {
        let mut best = 0;
        for i in 1..ranked.len() {
            if ranked[i].1 > ranked[best].1 || (ranked[i].1 == ranked[best].1 && ranked[i].0 < ranked[best].0) {
                best = i;
            }
        }
        let (t, score) = ranked.remove(best);
        out.push(ScoredOperation {
            class_name: t.class_name,
            feature_name: t.feature_name,
            event_type: t.event_type,
            score,
        });
    }
    out
}

// ---------------------------------------------------------------------------
// Generators

pub const CLASSES: [&str; 4] = ["System", "Process", "Channel", "Port"];
pub const FEATURES: [&str; 5] = ["name", "ports", "width", "target", "priority"];

/// Small schema over [`CLASSES`] × [`FEATURES`]; roughly a quarter of the
/// pairs are missing so some generated events are schema-invalid.
pub fn random_schema<R: Rng>(rng: &mut R) -> MetamodelSchema {
    let mut builder = MetamodelSchema::builder("mm");
    let mut any = false;
    for class in CLASSES {
        for feature in FEATURES {
            if rng.gen_bool(0.75) {
                let kind = if rng.gen_bool(0.5) { FeatureKind::Attribute } else { FeatureKind::Reference };
                builder = builder.feature(class, feature, kind);
                any = true;
            }
        }
    }
    if !any {
        builder = builder.feature("System", "name", FeatureKind::Attribute);
    }
    builder.build().expect("non-empty schema")
}

pub fn random_event<R: Rng>(rng: &mut R) -> ModelingEvent {
    let class = CLASSES.choose(rng).unwrap();
    let feature = FEATURES.choose(rng).unwrap();
    let kind = *EventType::ALL.choose(rng).unwrap();
    ModelingEvent::new(*class, *feature, kind).unwrap()
}

pub fn random_events<R: Rng>(rng: &mut R, len: usize) -> Vec<ModelingEvent> {
    (0..len).map(|_| random_event(rng)).collect()
}

/// A trace set with distinct ids, non-decreasing millisecond timestamps
/// (some events without one) and mixed origins.
pub fn random_trace_set<R: Rng>(rng: &mut R, max_traces: usize, max_events: usize) -> TraceSet {
    let n = rng.gen_range(0..=max_traces);
    let traces = (0..n)
        .map(|i| {
            let mut clock: DateTime<Utc> = Utc.timestamp_millis_opt(rng.gen_range(0..4_000_000_000_000)).unwrap();
            let len = rng.gen_range(1..=max_events);
            let events = (0..len)
                .map(|_| {
                    clock += Duration::milliseconds(rng.gen_range(0..100_000));
                    let stamp = if rng.gen_bool(0.9) { Some(clock) } else { None };
                    random_event(rng).with_timestamp(stamp)
                })
                .collect();
            let origin = match rng.gen_range(0..3) {
                0 => Origin::Human,
                1 => Origin::Synthetic("gen-x".into()),
                _ => Origin::Mixed,
            };
            Trace::new(format!("tr-{i}"), events)
                .with_model_id(format!("model-{}", rng.gen_range(0..5)))
                .with_origin(origin)
        })
        .collect();
    TraceSet::new("mm", traces)
}

/// Events as (class, feature, type, timestamp) for comparisons that ignore
/// the raw source text.
pub fn event_keys(trace: &Trace) -> Vec<(String, String, EventType, Option<DateTime<Utc>>)> {
    trace
        .events
        .iter()
        .map(|e| (e.class_name().to_string(), e.feature_name().to_string(), e.event_type(), e.timestamp()))
        .collect()
}

pub fn fixture_path(name: &str) -> std::path::PathBuf {
    std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fixtures").join(name)
}
