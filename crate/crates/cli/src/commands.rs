use std::collections::BTreeMap;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Duration;

use serde::Serialize;
use serde_json::json;
use traceforge_core::eval::{self, ConfigGrid, EvalReport, GridOptions};
use traceforge_core::formats::{render_event_lines, write_dataset_xes, write_xes_with};
use traceforge_core::metrics::{self, AssessOptions};
use traceforge_core::recommender::{self, ScoredOperation};
use traceforge_core::synth::{
    self, Demonstration, GenerateOptions, GenerationRecord, HttpClient, LlmClient, MockClient, ModelSummary,
    PromptTemplate, SynthOptions, API_KEY_ENV,
};
use traceforge_core::{
    validate_event_against_schema, OpKind, Origin, ParseMode, ParseReport, RecConfig, RecommenderIndex, SchemaCheck,
    TraceSet,
};

use crate::config::PipelineConfig;
use crate::error::CliError;
use crate::io::{self as fio, Format};
use crate::{
    EvaluateArgs, GenerateArgs, InputFormat, KindArg, MetricsArgs, MixArgs, OutputFormat, ParseArgs, RecommendArgs,
    TrainArgs, ValidateArgs, XvalArgs,
};

pub struct Context {
    pub config: PipelineConfig,
    pub jobs: Option<usize>,
}

fn input_format(flags: &InputFormat, path: &Path) -> Format {
    if flags.xes {
        Format::Xes
    } else if flags.lines {
        Format::Lines
    } else {
        Format::detect(path)
    }
}

fn to_json_pretty<T: Serialize>(value: &T) -> String {
    let mut text = serde_json::to_string_pretty(value).expect("value serializes");
    text.push('\n');
    text
}

fn print_stdout(text: &str) -> Result<(), CliError> {
    let mut out = std::io::stdout().lock();
    out.write_all(text.as_bytes())
        .and_then(|_| out.flush())
        .map_err(|e| CliError::runtime("io", format!("stdout: {e}")))
}

fn load_grid(ctx: &Context, path: Option<&Path>) -> Result<ConfigGrid, CliError> {
    let grid = match path {
        Some(p) => fio::read_json(p)?,
        None => ctx.config.grid.clone(),
    };
    grid.validate()?;
    Ok(grid)
}

fn load_schema(ctx: &Context, flag: Option<&Path>) -> Result<traceforge_core::MetamodelSchema, CliError> {
    fio::read_schema(&ctx.config.schema_path(flag)?)
}

pub fn parse(ctx: &Context, args: ParseArgs) -> Result<(), CliError> {
    let format = input_format(&args.format, &args.input);
    let mode = if args.strict { ParseMode::Strict } else { ParseMode::Lenient };
    let keys = &ctx.config.xes_keys;
    let (mut set, report) = fio::read_traces(&args.input, format, mode, keys)?;
    if let Some(origin) = &args.origin {
        let origin: Origin = origin.parse()?;
        for trace in &mut set.traces {
            trace.origin = origin.clone();
        }
    }
    let target = match args.to {
        Some(OutputFormat::Xes) => Format::Xes,
        Some(OutputFormat::Lines) => Format::Lines,
        None => format,
    };
    let body = match target {
        Format::Xes => write_xes_with(&set, keys),
        Format::Lines => {
            if set.len() != 1 {
                return Err(CliError::input(
                    "args",
                    format!("event-line output holds one trace, input has {}; use --to xes", set.len()),
                ));
            }
            render_event_lines(&set.traces[0]).into_bytes()
        }
    };
    let report_json = to_json_pretty(&report);
    match &args.output {
        Some(path) => {
            fio::write_atomic(path, &body)?;
            match &args.report {
                Some(report_path) => fio::write_atomic(report_path, report_json.as_bytes())?,
                None => print_stdout(&report_json)?,
            }
        }
        None => {
            if let Some(report_path) = &args.report {
                fio::write_atomic(report_path, report_json.as_bytes())?;
            }
            print_stdout(&String::from_utf8_lossy(&body))?;
        }
    }
    Ok(())
}

#[derive(Serialize)]
struct InvalidEvent {
    ordinal: usize,
    event: String,
    problem: &'static str,
}

#[derive(Serialize)]
struct TraceValidity {
    trace_id: String,
    events: usize,
    correctness: f64,
    schema_valid_events: usize,
    invalid_events: Vec<InvalidEvent>,
}

#[derive(Serialize)]
struct ValidationReport {
    source: String,
    metamodel_id: String,
    traces: Vec<TraceValidity>,
    parse_report: ParseReport,
}

pub fn validate(ctx: &Context, args: ValidateArgs) -> Result<(), CliError> {
    let schema = load_schema(ctx, args.schema.as_deref())?;
    let format = input_format(&args.format, &args.traces);
    let (set, report) = fio::read_traces(&args.traces, format, ParseMode::Lenient, &ctx.config.xes_keys)?;
    // Line files are scored on their raw text; XES events that failed to
    // parse count against the whole log.
    let file_correctness = match format {
        Format::Lines => metrics::correctness(&fio::read_text(&args.traces)?),
        Format::Xes => {
            let total = report.accepted_events + report.rejected_lines.len();
            if total == 0 {
                1.0
            } else {
                report.accepted_events as f64 / total as f64
            }
        }
    };
    let traces: Vec<TraceValidity> = set
        .traces
        .iter()
        .map(|trace| {
            let invalid_events: Vec<InvalidEvent> = trace
                .events
                .iter()
                .enumerate()
                .filter_map(|(i, event)| {
                    let problem = match validate_event_against_schema(event, &schema) {
                        SchemaCheck::Valid(_) => return None,
                        SchemaCheck::UnknownClass => "unknown class",
                        SchemaCheck::UnknownFeature => "unknown feature",
                    };
                    Some(InvalidEvent {
                        ordinal: i + 1,
                        event: event.render(),
                        problem,
                    })
                })
                .collect();
            TraceValidity {
                trace_id: trace.id.clone(),
                events: trace.events.len(),
                correctness: file_correctness,
                schema_valid_events: trace.events.len() - invalid_events.len(),
                invalid_events,
            }
        })
        .collect();
    let all_valid = file_correctness >= 1.0 && traces.iter().all(|t| t.invalid_events.is_empty());
    let out = ValidationReport {
        source: report.source.clone(),
        metamodel_id: set.metamodel_id.clone(),
        traces,
        parse_report: report,
    };
    let text = to_json_pretty(&out);
    match &args.output {
        Some(path) => fio::write_atomic(path, text.as_bytes())?,
        None => print_stdout(&text)?,
    }
    if args.strict && !all_valid {
        return Err(CliError::input("validate", "input contains invalid lines or schema-invalid events"));
    }
    Ok(())
}

/// Pairs synthetic traces with the first reference trace of the same model.
fn pair_by_model(synthetic: &TraceSet, reference: &TraceSet) -> Result<BTreeMap<String, String>, CliError> {
    let mut by_model: BTreeMap<&str, &str> = BTreeMap::new();
    for trace in &reference.traces {
        by_model.entry(trace.model_id.as_str()).or_insert(trace.id.as_str());
    }
    synthetic
        .traces
        .iter()
        .map(|trace| {
            by_model
                .get(trace.model_id.as_str())
                .map(|rid| (trace.id.clone(), rid.to_string()))
                .ok_or_else(|| {
                    CliError::input(
                        "metrics",
                        format!("no reference trace for model `{}` of `{}`", trace.model_id, trace.id),
                    )
                })
        })
        .collect()
}

pub fn metrics(ctx: &Context, args: MetricsArgs) -> Result<(), CliError> {
    let schema = load_schema(ctx, args.schema.as_deref())?;
    let keys = &ctx.config.xes_keys;
    let (synthetic, _) = fio::read_traces(&args.synthetic, Format::detect(&args.synthetic), ParseMode::Lenient, keys)?;
    let (reference, _) = fio::read_traces(&args.reference, Format::detect(&args.reference), ParseMode::Lenient, keys)?;
    let pairing: BTreeMap<String, String> = match &args.pairs {
        Some(path) => fio::read_json(path)?,
        None => pair_by_model(&synthetic, &reference)?,
    };
    let mut options = AssessOptions {
        q: args.q.unwrap_or(ctx.config.q),
        confidence: args.confidence,
        ..AssessOptions::default()
    };
    if let Some(path) = &args.records {
        let records: Vec<GenerationRecord> = fio::read_json(path)?;
        for record in records.into_iter().filter(|r| r.accepted) {
            options
                .raw_texts
                .insert(synth::synthetic_trace_id(&record.model_id), record.cleaned_text);
        }
    }
    let report = metrics::assess_dataset(&synthetic, &reference, &schema, &pairing, &options)?;
    let json_text = to_json_pretty(&report);
    if let Some(path) = &args.output {
        fio::write_atomic(path, json_text.as_bytes())?;
    }
    if let Some(path) = &args.csv {
        fio::write_atomic(path, report.to_csv().as_bytes())?;
    }
    if args.output.is_none() && args.csv.is_none() {
        print_stdout(&json_text)?;
    }
    Ok(())
}

#[derive(Serialize)]
struct GenerateSummary {
    generator: String,
    models: usize,
    accepted: usize,
    rejected: usize,
    failed: usize,
    synthetic: PathBuf,
    records: PathBuf,
    pairs: PathBuf,
}

pub fn generate(ctx: &Context, args: GenerateArgs) -> Result<(), CliError> {
    let config = &ctx.config;
    let models: Vec<ModelSummary> = fio::read_json(&args.models)?;
    let demos: Vec<Demonstration> = fio::read_json(&args.demos)?;
    let template = match &config.prompt_template_path {
        Some(path) => PromptTemplate::new(fio::read_text(path)?)?,
        None => PromptTemplate::default(),
    };
    let mut options = SynthOptions {
        shots: args.shots.unwrap_or(config.shots),
        gate_threshold: args.gate_threshold.unwrap_or(config.gate_threshold),
        retries_on_reject: config.retries_on_reject,
        concurrency: config.concurrency.min(ctx.jobs.unwrap_or(usize::MAX)).max(1),
        generate: GenerateOptions {
            timeout: Duration::from_secs(config.timeout_secs),
            max_retries: config.max_retries,
            ..GenerateOptions::default()
        },
        template,
        ..SynthOptions::default()
    };
    if let Some(text) = &config.instructions {
        options.instructions = text.clone();
    }
    if let Some(text) = &config.format_note {
        options.format_note = text.clone();
    }
    let client: Box<dyn LlmClient> = if args.mock {
        Box::new(MockClient::new(config.require_seed(args.seed, "generate --mock")?))
    } else {
        Box::new(HttpClient::new(config.llm.clone()).with_api_key(std::env::var(API_KEY_ENV).ok()))
    };
    let (set, records) = synth::synthesize_dataset(&models, &demos, client.as_ref(), &options)?;
    let pairs: BTreeMap<String, String> = set.traces.iter().map(|t| (t.id.clone(), t.model_id.clone())).collect();

    let out_dir = args
        .out_dir
        .clone()
        .or_else(|| config.output_dir.clone())
        .unwrap_or_else(|| PathBuf::from("."));
    let synthetic_path = out_dir.join("synthetic.xes");
    let records_path = out_dir.join("records.json");
    let pairs_path = out_dir.join("pairs.json");
    fio::write_atomic(&synthetic_path, &write_xes_with(&set, &config.xes_keys))?;
    fio::write_atomic(&records_path, to_json_pretty(&records).as_bytes())?;
    fio::write_atomic(&pairs_path, to_json_pretty(&pairs).as_bytes())?;

    let failed = records.iter().filter(|r| r.error.is_some()).count();
    let summary = GenerateSummary {
        generator: client.id().to_string(),
        models: models.len(),
        accepted: set.len(),
        rejected: records.iter().filter(|r| !r.accepted && r.error.is_none()).count(),
        failed,
        synthetic: synthetic_path,
        records: records_path,
        pairs: pairs_path,
    };
    print_stdout(&to_json_pretty(&summary))
}

pub fn mix(ctx: &Context, args: MixArgs) -> Result<(), CliError> {
    let keys = &ctx.config.xes_keys;
    let seed = ctx.config.require_seed(args.seed, "mix")?;
    let (human, _) = fio::read_traces(&args.human, Format::detect(&args.human), ParseMode::Lenient, keys)?;
    let (synthetic, _) = fio::read_traces(&args.synthetic, Format::detect(&args.synthetic), ParseMode::Lenient, keys)?;
    let mut dataset = synth::mix_datasets(&human, &synthetic, args.ratio, seed, args.size)?;
    if let Some(name) = args.name {
        dataset.name = name;
    }
    fio::write_atomic(&args.output, &write_dataset_xes(&dataset, keys))?;
    print_stdout(&to_json_pretty(&json!({
        "dataset": dataset.name,
        "traces": dataset.trace_set.len(),
        "synthetic": dataset.trace_set.synthetic_count(),
        "synthetic_ratio": dataset.synthetic_ratio,
        "seed": seed,
        "output": args.output,
    })))
}

pub fn train(ctx: &Context, args: TrainArgs) -> Result<(), CliError> {
    let schema = load_schema(ctx, args.schema.as_deref())?;
    let (set, _) = fio::read_traces(&args.traces, Format::detect(&args.traces), ParseMode::Lenient, &ctx.config.xes_keys)?;
    let index = recommender::train(&set, &schema, args.seed.or(ctx.config.seed))?;
    fio::write_atomic(&args.output, index.to_json().as_bytes())?;
    print_stdout(&to_json_pretty(&json!({
        "index": args.output,
        "traces": index.len(),
        "metamodel_id": index.metamodel_id,
    })))
}

#[derive(Serialize)]
struct RecommendOutput {
    context_events: usize,
    recommendations: BTreeMap<&'static str, Vec<ScoredOperation>>,
}

pub fn recommend(ctx: &Context, args: RecommendArgs) -> Result<(), CliError> {
    let index = RecommenderIndex::from_json(&fio::read_text(&args.index)?)?;
    let (set, _) = fio::read_traces(&args.context, Format::Lines, ParseMode::Lenient, &ctx.config.xes_keys)?;
    let events = &set.traces[0].events;
    let context_len = match args.cr {
        Some(cr) => {
            if !(cr > 0.0 && cr <= 1.0) {
                return Err(CliError::input("args", format!("--cr {cr} outside (0, 1]")));
            }
            eval::context_length(events.len(), cr).unwrap_or(events.len())
        }
        None => events.len(),
    };
    let context = &events[..context_len];
    let config = RecConfig::new(args.cr.unwrap_or(1.0), args.co)?
        .with_neighbors(args.neighbors.unwrap_or(ctx.config.neighbors));
    let kinds: Vec<OpKind> = match args.kind {
        KindArg::Class => vec![OpKind::ClassOps],
        KindArg::Attribute => vec![OpKind::AttributeOps],
        KindArg::Both => OpKind::BOTH.to_vec(),
    };
    let mut recommendations = BTreeMap::new();
    for kind in kinds {
        let rec = recommender::recommend(context, &index, &config, kind)?;
        recommendations.insert(kind.label(), rec.items);
    }
    print_stdout(&to_json_pretty(&RecommendOutput {
        context_events: context.len(),
        recommendations,
    }))
}

fn emit_report(report: &EvalReport, csv: Option<&Path>, json_path: Option<&Path>, timing: bool) -> Result<(), CliError> {
    if let Some(path) = csv {
        fio::write_atomic(path, report.to_csv().as_bytes())?;
    }
    if let Some(path) = json_path {
        fio::write_atomic(path, report.to_json(timing).as_bytes())?;
    }
    if csv.is_none() && json_path.is_none() {
        print_stdout(&report.to_csv())?;
    }
    Ok(())
}

pub fn evaluate(ctx: &Context, args: EvaluateArgs) -> Result<(), CliError> {
    let schema = load_schema(ctx, args.schema.as_deref())?;
    let grid = load_grid(ctx, args.grid.as_deref())?;
    let dataset = fio::read_dataset(&args.dataset, &ctx.config.xes_keys)?;
    let options = GridOptions {
        folds: args.k.unwrap_or(ctx.config.k_folds),
        seed: ctx.config.require_seed(args.seed, "evaluate")?,
        neighbors: args.neighbors.unwrap_or(ctx.config.neighbors),
    };
    let report = eval::run_grid(&dataset, &schema, &grid, &options)?;
    emit_report(&report, args.csv.as_deref(), args.json.as_deref(), args.timing)
}

pub fn xval(ctx: &Context, args: XvalArgs) -> Result<(), CliError> {
    let schema = load_schema(ctx, args.schema.as_deref())?;
    let grid = load_grid(ctx, args.grid.as_deref())?;
    let named = grid.config(&args.config)?;
    let neighbors = args.neighbors.unwrap_or(ctx.config.neighbors);
    let keys = &ctx.config.xes_keys;
    let train = fio::read_dataset(&args.train, keys)?;
    let validation = fio::read_dataset(&args.validation, keys)?;
    let report = match &args.index {
        Some(path) => {
            let index = RecommenderIndex::from_json(&fio::read_text(path)?)?;
            let mut report = eval::cross_dataset_eval_with_index(&index, &validation, &schema, &named, neighbors)?;
            report.dataset = format!("{}->{}", train.name, validation.name);
            report
        }
        None => eval::cross_dataset_eval(&train, &validation, &schema, &named, neighbors)?,
    };
    emit_report(&report, args.csv.as_deref(), args.json.as_deref(), args.timing)
}
