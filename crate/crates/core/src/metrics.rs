//! Quality metrics for synthetic traces.
//!
//! Frozen definitions (all similarities lie in [0, 1]):
//!
//! * correctness: grammar-valid non-blank lines / non-blank lines (1 for no lines)
//! * LCS: |LCS(a, b)| / max(|a|, |b|)
//! * Jaro: (m/|a| + m/|b| + (m - t)/m) / 3, match window ⌊max(|a|,|b|)/2⌋ - 1,
//!   t = half the matched positions that are out of order
//! * cosine: dot product of token-count vectors over the product of their norms
//! * Jaccard: |A ∩ B| / |A ∪ B| over token sets
//! * Dice: 2|A ∩ B| / (|A| + |B|) over token sets
//! * q-gram: 1 - Σ_g |c_a(g) - c_b(g)| / (|G_a| + |G_b|) over q-gram count profiles
//! * hallucination: schema-valid additive synthetic events / additive reference events
//!
//! Every similarity is 1 when both inputs are empty and 0 when exactly one is.
//! LCS and Jaro run on the characters of the rendered trace text; the other
//! four run on `class.feature.TYPE` event tokens.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::hash::Hash;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::MetricError;
use crate::formats::parse_event_line;
use crate::stats::{describe, DescriptiveStats};
use crate::trace::{validate_event_against_schema, MetamodelSchema, Trace, TraceSet};

pub const DEFAULT_Q: usize = 2;

pub fn correctness(raw_trace_text: &str) -> f64 {
    let mut total = 0usize;
    let mut valid = 0usize;
    for line in raw_trace_text.lines().filter(|l| !l.trim().is_empty()) {
        total += 1;
        if parse_event_line(line).is_ok() {
            valid += 1;
        }
    }
    if total == 0 {
        1.0
    } else {
        valid as f64 / total as f64
    }
}

/// Length of the longest common subsequence.
pub fn lcs_length<T: PartialEq>(a: &[T], b: &[T]) -> usize {
    let (long, short) = if a.len() >= b.len() { (a, b) } else { (b, a) };
    let mut prev = vec![0usize; short.len() + 1];
    let mut curr = vec![0usize; short.len() + 1];
    for x in long {
        for (j, y) in short.iter().enumerate() {
            curr[j + 1] = if x == y {
                prev[j] + 1
            } else {
                curr[j].max(prev[j + 1])
            };
        }
        std::mem::swap(&mut prev, &mut curr);
    }
    prev[short.len()]
}

pub fn lcs_similarity<T: PartialEq>(a: &[T], b: &[T]) -> f64 {
    let longest = a.len().max(b.len());
    if longest == 0 {
        return 1.0;
    }
    lcs_length(a, b) as f64 / longest as f64
}

pub fn jaro_similarity<T: PartialEq>(a: &[T], b: &[T]) -> f64 {
    if a.is_empty() && b.is_empty() {
        return 1.0;
    }
    if a.is_empty() || b.is_empty() {
        return 0.0;
    }
    let window = (a.len().max(b.len()) / 2).saturating_sub(1);
    let mut b_taken = vec![false; b.len()];
    let mut a_matched = Vec::new();
    for (i, x) in a.iter().enumerate() {
        let lo = i.saturating_sub(window);
        let hi = (i + window + 1).min(b.len());
        if lo >= hi {
            continue;
        }
        if let Some(j) = (lo..hi).find(|&j| !b_taken[j] && b[j] == *x) {
            b_taken[j] = true;
            a_matched.push(x);
        }
    }
    let matches = a_matched.len();
    if matches == 0 {
        return 0.0;
    }
    let out_of_order = b
        .iter()
        .zip(&b_taken)
        .filter(|(_, taken)| **taken)
        .zip(&a_matched)
        .filter(|((y, _), x)| *y != **x)
        .count();
    let m = matches as f64;
    let t = out_of_order as f64 / 2.0;
    (m / a.len() as f64 + m / b.len() as f64 + (m - t) / m) / 3.0
}

fn counts<T: Eq + Hash>(items: &[T]) -> HashMap<&T, usize> {
    let mut map = HashMap::new();
    for item in items {
        *map.entry(item).or_insert(0) += 1;
    }
    map
}

/// Cosine similarity of token-count vectors.
pub fn cosine_similarity<T: Eq + Hash>(a: &[T], b: &[T]) -> f64 {
    match (a.is_empty(), b.is_empty()) {
        (true, true) => return 1.0,
        (true, false) | (false, true) => return 0.0,
        _ => {}
    }
    let ca = counts(a);
    let cb = counts(b);
    let dot: usize = ca.iter().filter_map(|(k, x)| cb.get(k).map(|y| x * y)).sum();
    let na: usize = ca.values().map(|x| x * x).sum();
    let nb: usize = cb.values().map(|y| y * y).sum();
    (dot as f64 / ((na as f64) * (nb as f64)).sqrt()).clamp(0.0, 1.0)
}

fn set_overlap<T: Eq + Hash>(a: &[T], b: &[T]) -> (usize, usize, usize) {
    let sa: HashSet<&T> = a.iter().collect();
    let sb: HashSet<&T> = b.iter().collect();
    let inter = sa.intersection(&sb).count();
    (inter, sa.len(), sb.len())
}

pub fn jaccard_similarity<T: Eq + Hash>(a: &[T], b: &[T]) -> f64 {
    let (inter, na, nb) = set_overlap(a, b);
    let union = na + nb - inter;
    if union == 0 {
        1.0
    } else {
        inter as f64 / union as f64
    }
}

pub fn dice_similarity<T: Eq + Hash>(a: &[T], b: &[T]) -> f64 {
    let (inter, na, nb) = set_overlap(a, b);
    if na + nb == 0 {
        1.0
    } else {
        2.0 * inter as f64 / (na + nb) as f64
    }
}

pub fn qgram_similarity<T: Eq + Hash>(a: &[T], b: &[T], q: usize) -> Result<f64, MetricError> {
    if q < 1 {
        return Err(MetricError::InvalidQ(q));
    }
    let pa: HashMap<&[T], usize> = profile(a, q);
    let pb: HashMap<&[T], usize> = profile(b, q);
    let total: usize = pa.values().sum::<usize>() + pb.values().sum::<usize>();
    if total == 0 {
        return Ok(1.0);
    }
    let mut distance = 0usize;
    for (gram, x) in &pa {
        distance += x.abs_diff(pb.get(gram).copied().unwrap_or(0));
    }
    for (gram, y) in &pb {
        if !pa.contains_key(gram) {
            distance += y;
        }
    }
    Ok(1.0 - distance as f64 / total as f64)
}

fn profile<T: Eq + Hash>(items: &[T], q: usize) -> HashMap<&[T], usize> {
    let mut map = HashMap::new();
    if items.len() >= q {
        for window in items.windows(q) {
            *map.entry(window).or_insert(0) += 1;
        }
    }
    map
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DiversityVector {
    pub lcs: f64,
    pub jaro: f64,
    pub cosine: f64,
    pub jaccard: f64,
    pub dice: f64,
    pub qgram: f64,
}

impl DiversityVector {
    pub fn components(&self) -> [(&'static str, f64); 6] {
        [
            ("lcs", self.lcs),
            ("jaro", self.jaro),
            ("cosine", self.cosine),
            ("jaccard", self.jaccard),
            ("dice", self.dice),
            ("qgram", self.qgram),
        ]
    }
}

pub fn diversity(synthetic: &Trace, reference: &Trace) -> DiversityVector {
    diversity_with_q(synthetic, reference, DEFAULT_Q).expect("default q is valid")
}

pub fn diversity_with_q(synthetic: &Trace, reference: &Trace, q: usize) -> Result<DiversityVector, MetricError> {
    let sa: Vec<char> = synthetic.render_text().chars().collect();
    let ra: Vec<char> = reference.render_text().chars().collect();
    let st = synthetic.tokens();
    let rt = reference.tokens();
    Ok(DiversityVector {
        lcs: lcs_similarity(&sa, &ra),
        jaro: jaro_similarity(&sa, &ra),
        cosine: cosine_similarity(&st, &rt),
        jaccard: jaccard_similarity(&st, &rt),
        dice: dice_similarity(&st, &rt),
        qgram: qgram_similarity(&st, &rt, q)?,
    })
}

/// Ratio of schema-valid additive synthetic events to additive reference
/// events. 1 is ideal; above 1 means over-generation, below 1 means
/// under-generation or invented elements.
pub fn hallucination(synthetic: &Trace, reference: &Trace, schema: &MetamodelSchema) -> Result<f64, MetricError> {
    let reference_additive = reference
        .events
        .iter()
        .filter(|e| e.event_type().is_additive())
        .count();
    if reference_additive == 0 {
        return Err(MetricError::DegenerateReference(reference.id.clone()));
    }
    let valid_additive = synthetic
        .events
        .iter()
        .filter(|e| e.event_type().is_additive() && validate_event_against_schema(e, schema).is_valid())
        .count();
    Ok(valid_additive as f64 / reference_additive as f64)
}

/// Column order for report summaries and CSV output.
pub const METRIC_NAMES: [&str; 8] = [
    "correctness",
    "lcs",
    "jaro",
    "cosine",
    "jaccard",
    "dice",
    "qgram",
    "hallucination",
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceQuality {
    pub trace_id: String,
    pub reference_id: String,
    pub correctness: f64,
    pub diversity: DiversityVector,
    pub hallucination: f64,
}

impl TraceQuality {
    pub fn metric(&self, name: &str) -> Option<f64> {
        match name {
            "correctness" => Some(self.correctness),
            "hallucination" => Some(self.hallucination),
            other => self
                .diversity
                .components()
                .into_iter()
                .find(|(n, _)| *n == other)
                .map(|(_, v)| v),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QualityReport {
    pub per_trace: Vec<TraceQuality>,
    pub summary: BTreeMap<String, DescriptiveStats>,
}

#[derive(Debug, Clone)]
pub struct AssessOptions {
    pub q: usize,
    pub confidence: f64,
    /// Raw generator output per synthetic trace id, used for correctness.
    /// Traces without an entry are scored on their events' source lines.
    pub raw_texts: BTreeMap<String, String>,
}

impl Default for AssessOptions {
    fn default() -> Self {
        AssessOptions {
            q: DEFAULT_Q,
            confidence: 0.95,
            raw_texts: BTreeMap::new(),
        }
    }
}

/// Scores every synthetic trace against its paired reference.
///
/// `pairing` maps synthetic trace ids to reference trace ids and must cover
/// every synthetic trace. Rows follow the synthetic set's order.
pub fn assess_dataset(
    synthetic: &TraceSet,
    reference: &TraceSet,
    schema: &MetamodelSchema,
    pairing: &BTreeMap<String, String>,
    options: &AssessOptions,
) -> Result<QualityReport, MetricError> {
    if pairing.is_empty() {
        return Err(MetricError::EmptyPairing);
    }
    for id in pairing.keys() {
        if synthetic.get(id).is_none() {
            return Err(MetricError::UnpairedTrace(id.clone()));
        }
    }
    let mut pairs = Vec::with_capacity(synthetic.len());
    for trace in &synthetic.traces {
        let reference_trace = pairing
            .get(&trace.id)
            .and_then(|rid| reference.get(rid))
            .ok_or_else(|| MetricError::UnpairedTrace(trace.id.clone()))?;
        pairs.push((trace, reference_trace));
    }

    let per_trace = pairs
        .par_iter()
        .map(|(syn, reference)| {
            let text = match options.raw_texts.get(&syn.id) {
                Some(text) => text.clone(),
                None => syn.events.iter().map(|e| format!("{}\n", e.raw())).collect(),
            };
            Ok(TraceQuality {
                trace_id: syn.id.clone(),
                reference_id: reference.id.clone(),
                correctness: correctness(&text),
                diversity: diversity_with_q(syn, reference, options.q)?,
                hallucination: hallucination(syn, reference, schema)?,
            })
        })
        .collect::<Result<Vec<_>, MetricError>>()?;

    let mut summary = BTreeMap::new();
    for name in METRIC_NAMES {
        let column: Vec<f64> = per_trace.iter().filter_map(|row| row.metric(name)).collect();
        summary.insert(name.to_string(), describe(&column, options.confidence)?);
    }
    Ok(QualityReport { per_trace, summary })
}

impl QualityReport {
    /// Per-trace rows, a blank line, then one summary row per metric.
    pub fn to_csv(&self) -> String {
        let mut rows = csv::Writer::from_writer(Vec::new());
        let mut header = vec!["trace_id", "reference_id"];
        header.extend(METRIC_NAMES);
        rows.write_record(&header).expect("in-memory csv");
        for row in &self.per_trace {
            let mut record = vec![row.trace_id.clone(), row.reference_id.clone()];
            record.extend(METRIC_NAMES.iter().map(|n| fmt_num(row.metric(n))));
            rows.write_record(&record).expect("in-memory csv");
        }
        let mut out = String::from_utf8(rows.into_inner().expect("flush")).expect("utf-8");
        out.push('\n');

        let mut block = csv::Writer::from_writer(Vec::new());
        block
            .write_record(["metric", "n", "mean", "se", "ci_low", "ci_high", "median", "sd", "variance", "iqr"])
            .expect("in-memory csv");
        for name in METRIC_NAMES {
            if let Some(s) = self.summary.get(name) {
                block
                    .write_record([
                        name.to_string(),
                        s.n.to_string(),
                        fmt_num(Some(s.mean)),
                        fmt_num(s.se),
                        fmt_num(s.ci_low),
                        fmt_num(s.ci_high),
                        fmt_num(Some(s.median)),
                        fmt_num(s.sd),
                        fmt_num(s.variance),
                        fmt_num(Some(s.iqr)),
                    ])
                    .expect("in-memory csv");
            }
        }
        out.push_str(&String::from_utf8(block.into_inner().expect("flush")).expect("utf-8"));
        out
    }
}

fn fmt_num(value: Option<f64>) -> String {
    value.map(|v| v.to_string()).unwrap_or_default()
}
