//! k-fold and cross-dataset evaluation of the recommender.
//!
//! For each test trace of N events the first ⌈CR·N⌉ events (clamped to
//! [1, N-1]) are the context. Ground truth is the set of operations of the
//! requested kind in the remaining events that do not already occur in the
//! context. Precision and recall are computed per trace and macro-averaged
//! over the traces that have ground truth; F1 is the harmonic mean of the
//! averaged precision and recall.

use std::collections::BTreeSet;
use std::time::{Duration, Instant};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::EvalError;
use crate::recommender::{recommend, train_timed, OpKind, RecConfig, RecommenderIndex};
use crate::trace::{classify_triple, Dataset, MetamodelSchema, OperationTriple, Trace, TraceSet};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfigGrid {
    pub cr_levels: Vec<f64>,
    pub co_levels: Vec<usize>,
}

impl Default for ConfigGrid {
    fn default() -> Self {
        ConfigGrid {
            cr_levels: vec![0.2, 0.4, 0.6],
            co_levels: vec![1, 3, 5],
        }
    }
}

/// One named cell of the grid, `C<i>.<j>` with 1-based indices into the CR
/// and CO levels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NamedConfig {
    pub name: String,
    pub context_ratio: f64,
    pub cutoff: usize,
}

impl ConfigGrid {
    pub fn validate(&self) -> Result<(), EvalError> {
        if self.cr_levels.len() != 3 || self.co_levels.len() != 3 {
            return Err(EvalError::InvalidGrid("expected exactly 3 CR and 3 CO levels".into()));
        }
        if !self.cr_levels.windows(2).all(|w| w[0] < w[1]) || !self.co_levels.windows(2).all(|w| w[0] < w[1]) {
            return Err(EvalError::InvalidGrid("levels must be strictly increasing".into()));
        }
        if self.cr_levels.iter().any(|cr| !(*cr > 0.0 && *cr < 1.0)) {
            return Err(EvalError::InvalidGrid("CR levels must lie in (0, 1)".into()));
        }
        if self.co_levels[0] == 0 {
            return Err(EvalError::InvalidGrid("CO levels must be positive".into()));
        }
        Ok(())
    }

    pub fn configs(&self) -> Vec<NamedConfig> {
        let mut out = Vec::with_capacity(self.cr_levels.len() * self.co_levels.len());
        for (i, cr) in self.cr_levels.iter().enumerate() {
            for (j, co) in self.co_levels.iter().enumerate() {
                out.push(NamedConfig {
                    name: format!("C{}.{}", i + 1, j + 1),
                    context_ratio: *cr,
                    cutoff: *co,
                });
            }
        }
        out
    }

    pub fn config(&self, name: &str) -> Result<NamedConfig, EvalError> {
        self.configs()
            .into_iter()
            .find(|c| c.name == name)
            .ok_or_else(|| EvalError::UnknownConfig(name.to_string()))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Fold {
    pub train: TraceSet,
    pub test: TraceSet,
}

/// Seeded shuffle into `k` near-equal test partitions.
pub fn kfold_split(dataset: &Dataset, k: usize, seed: u64) -> Result<Vec<Fold>, EvalError> {
    let traces = &dataset.trace_set.traces;
    if k < 2 || traces.len() < k {
        return Err(EvalError::TooFewTraces {
            traces: traces.len(),
            folds: k,
        });
    }
    let mut order: Vec<usize> = (0..traces.len()).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));

    let base = traces.len() / k;
    let extra = traces.len() % k;
    let mut folds = Vec::with_capacity(k);
    let mut start = 0;
    for fold in 0..k {
        let size = base + usize::from(fold < extra);
        let test_idx: BTreeSet<usize> = order[start..start + size].iter().copied().collect();
        start += size;
        let pick = |want_test: bool| -> Vec<Trace> {
            order
                .iter()
                .filter(|i| test_idx.contains(i) == want_test)
                .map(|i| traces[*i].clone())
                .collect()
        };
        let metamodel = dataset.trace_set.metamodel_id.clone();
        folds.push(Fold {
            train: TraceSet::new(metamodel.clone(), pick(false)),
            test: TraceSet::new(metamodel, pick(true)),
        });
    }
    Ok(folds)
}

pub fn harmonic_mean(precision: f64, recall: f64) -> f64 {
    if precision + recall == 0.0 {
        0.0
    } else {
        2.0 * precision * recall / (precision + recall)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FoldMetrics {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub scored_traces: usize,
    pub skipped_traces: usize,
}

/// Number of leading events revealed as context, or `None` for traces too
/// short to split.
pub fn context_length(event_count: usize, context_ratio: f64) -> Option<usize> {
    if event_count < 2 {
        return None;
    }
    let wanted = (context_ratio * event_count as f64).ceil() as usize;
    Some(wanted.clamp(1, event_count - 1))
}

/// Ground-truth operations for one test trace.
pub fn ground_truth(trace: &Trace, context_len: usize, schema: &MetamodelSchema, kind: OpKind) -> BTreeSet<OperationTriple> {
    let context: BTreeSet<OperationTriple> = trace.events[..context_len].iter().map(|e| e.triple()).collect();
    trace.events[context_len..]
        .iter()
        .filter(|e| kind.matches(classify_triple(e.class_name(), e.feature_name(), schema)))
        .map(|e| e.triple())
        .filter(|t| !context.contains(t))
        .collect()
}

/// Scores a test set against an already-built index.
pub fn evaluate_with_index(
    index: &RecommenderIndex,
    test: &TraceSet,
    schema: &MetamodelSchema,
    config: &RecConfig,
    kind: OpKind,
) -> Result<FoldMetrics, EvalError> {
    config.validate()?;
    let mut precisions = Vec::new();
    let mut recalls = Vec::new();
    let mut skipped = 0;
    for trace in &test.traces {
        let Some(context_len) = context_length(trace.events.len(), config.context_ratio) else {
            skipped += 1;
            continue;
        };
        let truth = ground_truth(trace, context_len, schema, kind);
        if truth.is_empty() {
            skipped += 1;
            continue;
        }
        let rec = recommend(&trace.events[..context_len], index, config, kind)?;
        let hits = rec.items.iter().filter(|item| truth.contains(&item.triple())).count();
        let precision = if rec.items.is_empty() {
            0.0
        } else {
            hits as f64 / rec.items.len() as f64
        };
        precisions.push(precision);
        recalls.push(hits as f64 / truth.len() as f64);
    }
    if precisions.is_empty() {
        return Err(EvalError::NoScorableTraces);
    }
    let precision = precisions.iter().sum::<f64>() / precisions.len() as f64;
    let recall = recalls.iter().sum::<f64>() / recalls.len() as f64;
    Ok(FoldMetrics {
        precision,
        recall,
        f1: harmonic_mean(precision, recall),
        scored_traces: precisions.len(),
        skipped_traces: skipped,
    })
}

pub fn evaluate_fold(
    train: &TraceSet,
    test: &TraceSet,
    schema: &MetamodelSchema,
    config: &RecConfig,
    kind: OpKind,
) -> Result<FoldMetrics, EvalError> {
    let (index, _) = train_timed(train, schema, None)?;
    evaluate_with_index(&index, test, schema, config, kind)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalRow {
    pub kind: String,
    pub config: String,
    /// Fold number (1-based) or `avg`.
    pub fold: String,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub scored_traces: usize,
    pub skipped_traces: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub struct Timing {
    pub train_per_fold_secs: Vec<f64>,
    pub recommend_total_secs: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalBuildInfo {
    pub folds: usize,
    pub seed: Option<u64>,
    pub neighbors: usize,
    pub trace_count: usize,
    pub grid: ConfigGrid,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub dataset: String,
    pub rows: Vec<EvalRow>,
    pub build_info: EvalBuildInfo,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub timing: Option<Timing>,
}

impl EvalReport {
    pub fn row(&self, kind: OpKind, config: &str, fold: &str) -> Option<&EvalRow> {
        self.rows
            .iter()
            .find(|r| r.kind == kind.label() && r.config == config && r.fold == fold)
    }

    pub fn fold_rows(&self) -> impl Iterator<Item = &EvalRow> {
        self.rows.iter().filter(|r| r.fold != "avg")
    }

    /// CSV with columns dataset, kind, config, fold, precision, recall, f1.
    pub fn to_csv(&self) -> String {
        let mut writer = csv::Writer::from_writer(Vec::new());
        writer
            .write_record(["dataset", "kind", "config", "fold", "precision", "recall", "f1"])
            .expect("in-memory csv");
        for row in &self.rows {
            writer
                .write_record([
                    self.dataset.as_str(),
                    row.kind.as_str(),
                    row.config.as_str(),
                    row.fold.as_str(),
                    &row.precision.to_string(),
                    &row.recall.to_string(),
                    &row.f1.to_string(),
                ])
                .expect("in-memory csv");
        }
        String::from_utf8(writer.into_inner().expect("flush")).expect("utf-8")
    }

    /// Pretty JSON; timing is dropped when `with_timing` is false so that
    /// repeated runs compare byte-for-byte.
    pub fn to_json(&self, with_timing: bool) -> String {
        if with_timing {
            serde_json::to_string_pretty(self).expect("report serializes")
        } else {
            let stripped = EvalReport {
                timing: None,
                ..self.clone()
            };
            serde_json::to_string_pretty(&stripped).expect("report serializes")
        }
    }
}

/// Grid cells tolerate folds where no test trace has ground truth of the
/// requested kind; such a fold reports zeros and is left out of the average.
fn score_or_empty(result: Result<FoldMetrics, EvalError>, test_len: usize) -> Result<FoldMetrics, EvalError> {
    match result {
        Err(EvalError::NoScorableTraces) => Ok(FoldMetrics {
            precision: 0.0,
            recall: 0.0,
            f1: 0.0,
            scored_traces: 0,
            skipped_traces: test_len,
        }),
        other => other,
    }
}

fn average_row(kind: OpKind, config: &str, folds: &[FoldMetrics]) -> EvalRow {
    let scored: Vec<&FoldMetrics> = folds.iter().filter(|f| f.scored_traces > 0).collect();
    let n = scored.len().max(1) as f64;
    let precision = scored.iter().map(|f| f.precision).sum::<f64>() / n;
    let recall = scored.iter().map(|f| f.recall).sum::<f64>() / n;
    EvalRow {
        kind: kind.label().into(),
        config: config.into(),
        fold: "avg".into(),
        precision,
        recall,
        f1: harmonic_mean(precision, recall),
        scored_traces: folds.iter().map(|f| f.scored_traces).sum(),
        skipped_traces: folds.iter().map(|f| f.skipped_traces).sum(),
    }
}

fn fold_row(kind: OpKind, config: &str, fold: usize, m: &FoldMetrics) -> EvalRow {
    EvalRow {
        kind: kind.label().into(),
        config: config.into(),
        fold: fold.to_string(),
        precision: m.precision,
        recall: m.recall,
        f1: m.f1,
        scored_traces: m.scored_traces,
        skipped_traces: m.skipped_traces,
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridOptions {
    pub folds: usize,
    pub seed: u64,
    pub neighbors: usize,
}

impl Default for GridOptions {
    fn default() -> Self {
        GridOptions {
            folds: 5,
            seed: 0,
            neighbors: 5,
        }
    }
}

/// k-fold evaluation over every grid cell and both operation kinds.
///
/// Rows are ordered by kind (class, then attribute), configuration name and
/// fold, with each configuration's `avg` row after its folds.
pub fn run_grid(
    dataset: &Dataset,
    schema: &MetamodelSchema,
    grid: &ConfigGrid,
    options: &GridOptions,
) -> Result<EvalReport, EvalError> {
    grid.validate()?;
    let folds = kfold_split(dataset, options.folds, options.seed)?;
    let configs = grid.configs();

    type FoldResult = (Duration, Duration, Vec<FoldMetrics>);
    let per_fold: Vec<FoldResult> = folds
        .par_iter()
        .map(|fold| -> Result<FoldResult, EvalError> {
            let (index, train_time) = train_timed(&fold.train, schema, Some(options.seed))?;
            let started = Instant::now();
            let mut cells = Vec::with_capacity(OpKind::BOTH.len() * configs.len());
            for kind in OpKind::BOTH {
                for named in &configs {
                    let config = RecConfig::new(named.context_ratio, named.cutoff)?.with_neighbors(options.neighbors);
                    let result = evaluate_with_index(&index, &fold.test, schema, &config, kind);
                    cells.push(score_or_empty(result, fold.test.len())?);
                }
            }
            Ok((train_time, started.elapsed(), cells))
        })
        .collect::<Result<_, _>>()?;

    let mut rows = Vec::new();
    for (k, kind) in OpKind::BOTH.into_iter().enumerate() {
        for (c, named) in configs.iter().enumerate() {
            let cell = k * configs.len() + c;
            let metrics: Vec<FoldMetrics> = per_fold.iter().map(|(_, _, cells)| cells[cell]).collect();
            for (f, m) in metrics.iter().enumerate() {
                rows.push(fold_row(kind, &named.name, f + 1, m));
            }
            rows.push(average_row(kind, &named.name, &metrics));
        }
    }
    Ok(EvalReport {
        dataset: dataset.name.clone(),
        rows,
        build_info: EvalBuildInfo {
            folds: options.folds,
            seed: Some(options.seed),
            neighbors: options.neighbors,
            trace_count: dataset.trace_set.len(),
            grid: grid.clone(),
        },
        timing: Some(Timing {
            train_per_fold_secs: per_fold.iter().map(|(t, _, _)| t.as_secs_f64()).collect(),
            recommend_total_secs: per_fold.iter().map(|(_, r, _)| r.as_secs_f64()).sum(),
        }),
    })
}

/// Trains once on `train` and scores every trace of `validation`.
pub fn cross_dataset_eval(
    train: &Dataset,
    validation: &Dataset,
    schema: &MetamodelSchema,
    config: &NamedConfig,
    neighbors: usize,
) -> Result<EvalReport, EvalError> {
    let (index, train_time) = train_timed(&train.trace_set, schema, train.seed)?;
    let mut report = cross_dataset_eval_with_index(&index, validation, schema, config, neighbors)?;
    report.dataset = format!("{}->{}", train.name, validation.name);
    if let Some(timing) = report.timing.as_mut() {
        timing.train_per_fold_secs = vec![train_time.as_secs_f64()];
    }
    Ok(report)
}

/// Cross-dataset evaluation reusing a pre-built index.
pub fn cross_dataset_eval_with_index(
    index: &RecommenderIndex,
    validation: &Dataset,
    schema: &MetamodelSchema,
    config: &NamedConfig,
    neighbors: usize,
) -> Result<EvalReport, EvalError> {
    let rec_config = RecConfig::new(config.context_ratio, config.cutoff)?.with_neighbors(neighbors);
    let started = Instant::now();
    let mut rows = Vec::new();
    for kind in OpKind::BOTH {
        let result = evaluate_with_index(index, &validation.trace_set, schema, &rec_config, kind);
        let m = score_or_empty(result, validation.trace_set.len())?;
        rows.push(fold_row(kind, &config.name, 1, &m));
        rows.push(average_row(kind, &config.name, &[m]));
    }
    Ok(EvalReport {
        dataset: validation.name.clone(),
        rows,
        build_info: EvalBuildInfo {
            folds: 1,
            seed: validation.seed,
            neighbors,
            trace_count: validation.trace_set.len(),
            grid: ConfigGrid {
                cr_levels: vec![config.context_ratio],
                co_levels: vec![config.cutoff],
            },
        },
        timing: Some(Timing {
            train_per_fold_secs: vec![],
            recommend_total_secs: started.elapsed().as_secs_f64(),
        }),
    })
}
