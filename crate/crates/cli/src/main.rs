mod commands;
mod config;
mod error;
mod io;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::config::PipelineConfig;
use crate::error::CliError;

#[derive(Debug, Parser)]
#[command(name = "traceforge", version, about = "Modeling-event trace pipeline")]
struct Cli {
    /// Caps the number of worker threads.
    #[arg(long, global = true)]
    jobs: Option<usize>,

    /// Pipeline config file providing defaults for every subcommand.
    #[arg(long, global = true, value_name = "FILE")]
    pipeline: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Parse XES or event-line input and write it back normalized.
    Parse(ParseArgs),
    /// Report correctness and per-event schema validity.
    Validate(ValidateArgs),
    /// Score synthetic traces against their human references.
    Metrics(MetricsArgs),
    /// Generate synthetic traces through few-shot prompting.
    Generate(GenerateArgs),
    /// Mix human and synthetic traces at a given synthetic ratio.
    Mix(MixArgs),
    /// Build a recommender index.
    Train(TrainArgs),
    /// Recommend next operations for a partial trace.
    Recommend(RecommendArgs),
    /// Run k-fold evaluation over the configuration grid.
    Evaluate(EvaluateArgs),
    /// Train on one dataset and evaluate on another.
    Xval(XvalArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum OutputFormat {
    Xes,
    Lines,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum KindArg {
    Class,
    Attribute,
    Both,
}

#[derive(Debug, Args)]
pub struct InputFormat {
    /// Treat the input as XES.
    #[arg(long, conflicts_with = "lines")]
    pub xes: bool,
    /// Treat the input as event lines.
    #[arg(long)]
    pub lines: bool,
}

#[derive(Debug, Args)]
pub struct ParseArgs {
    pub input: PathBuf,
    #[command(flatten)]
    pub format: InputFormat,
    /// Fail on the first malformed line or event.
    #[arg(long)]
    pub strict: bool,
    /// Normalized output file; stdout when omitted.
    #[arg(short, long)]
    pub output: Option<PathBuf>,
    /// Output format; defaults to the input format.
    #[arg(long, value_enum)]
    pub to: Option<OutputFormat>,
    /// Where to write the parse report JSON.
    #[arg(long)]
    pub report: Option<PathBuf>,
    /// Origin stamped on every trace, e.g. `human` or `synthetic:gpt-4`.
    #[arg(long)]
    pub origin: Option<String>,
}

#[derive(Debug, Args)]
pub struct ValidateArgs {
    pub traces: PathBuf,
    #[arg(long)]
    pub schema: Option<PathBuf>,
    #[command(flatten)]
    pub format: InputFormat,
    /// Exit with status 2 when any line or event is invalid.
    #[arg(long)]
    pub strict: bool,
    #[arg(short, long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct MetricsArgs {
    pub synthetic: PathBuf,
    pub reference: PathBuf,
    /// JSON object mapping synthetic trace ids to reference trace ids;
    /// traces pair by model id when omitted.
    #[arg(long)]
    pub pairs: Option<PathBuf>,
    #[arg(long)]
    pub schema: Option<PathBuf>,
    /// Generation records; correctness is then scored on the cleaned
    /// responses.
    #[arg(long)]
    pub records: Option<PathBuf>,
    #[arg(long)]
    pub q: Option<usize>,
    #[arg(long, default_value_t = 0.95)]
    pub confidence: f64,
    /// Report JSON; stdout when neither this nor --csv is given.
    #[arg(short, long)]
    pub output: Option<PathBuf>,
    #[arg(long)]
    pub csv: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    /// JSON list of model summaries.
    pub models: PathBuf,
    /// JSON list of demonstrations.
    #[arg(long)]
    pub demos: PathBuf,
    /// Pipeline config; overrides --pipeline.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Use the built-in offline client.
    #[arg(long)]
    pub mock: bool,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Directory receiving synthetic.xes, records.json and pairs.json.
    #[arg(short, long)]
    pub out_dir: Option<PathBuf>,
    #[arg(long)]
    pub shots: Option<usize>,
    #[arg(long)]
    pub gate_threshold: Option<f64>,
}

#[derive(Debug, Args)]
pub struct MixArgs {
    pub human: PathBuf,
    pub synthetic: PathBuf,
    #[arg(long)]
    pub ratio: f64,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Number of traces in the result.
    #[arg(long)]
    pub size: Option<usize>,
    /// Dataset name; derived from the ratio when omitted.
    #[arg(long)]
    pub name: Option<String>,
    #[arg(short, long)]
    pub output: PathBuf,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    pub traces: PathBuf,
    #[arg(long)]
    pub schema: Option<PathBuf>,
    #[arg(short, long)]
    pub output: PathBuf,
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Args)]
pub struct RecommendArgs {
    pub index: PathBuf,
    /// Event-line file with the partial trace.
    #[arg(long)]
    pub context: PathBuf,
    /// Use only the leading share of the context file.
    #[arg(long)]
    pub cr: Option<f64>,
    #[arg(long, default_value_t = 5)]
    pub co: usize,
    #[arg(long, value_enum, default_value = "both")]
    pub kind: KindArg,
    #[arg(long)]
    pub neighbors: Option<usize>,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    pub dataset: PathBuf,
    #[arg(long)]
    pub schema: Option<PathBuf>,
    /// JSON grid with `cr_levels` and `co_levels`.
    #[arg(long)]
    pub grid: Option<PathBuf>,
    #[arg(long)]
    pub k: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub neighbors: Option<usize>,
    /// CSV report; stdout when neither this nor --json is given.
    #[arg(long)]
    pub csv: Option<PathBuf>,
    #[arg(long)]
    pub json: Option<PathBuf>,
    /// Include wall-clock timings in the JSON report.
    #[arg(long)]
    pub timing: bool,
}

#[derive(Debug, Args)]
pub struct XvalArgs {
    #[arg(long)]
    pub train: PathBuf,
    #[arg(long = "validate")]
    pub validation: PathBuf,
    /// Grid configuration name.
    #[arg(long, default_value = "C3.3")]
    pub config: String,
    #[arg(long)]
    pub schema: Option<PathBuf>,
    #[arg(long)]
    pub grid: Option<PathBuf>,
    /// Pre-built index to use instead of training on --train.
    #[arg(long)]
    pub index: Option<PathBuf>,
    #[arg(long)]
    pub neighbors: Option<usize>,
    #[arg(long)]
    pub csv: Option<PathBuf>,
    #[arg(long)]
    pub json: Option<PathBuf>,
    #[arg(long)]
    pub timing: bool,
}

fn run(cli: Cli) -> Result<(), CliError> {
    if let Some(jobs) = cli.jobs {
        if jobs == 0 {
            return Err(CliError::input("args", "--jobs must be at least 1"));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build_global()
            .map_err(|e| CliError::runtime("threads", e.to_string()))?;
    }
    let config_path = match &cli.command {
        Command::Generate(args) => args.config.clone().or(cli.pipeline.clone()),
        _ => cli.pipeline.clone(),
    };
    let config = match config_path {
        Some(path) => PipelineConfig::load(&path)?,
        None => PipelineConfig::default(),
    };
    let ctx = commands::Context { config, jobs: cli.jobs };
    match cli.command {
        Command::Parse(args) => commands::parse(&ctx, args),
        Command::Validate(args) => commands::validate(&ctx, args),
        Command::Metrics(args) => commands::metrics(&ctx, args),
        Command::Generate(args) => commands::generate(&ctx, args),
        Command::Mix(args) => commands::mix(&ctx, args),
        Command::Train(args) => commands::train(&ctx, args),
        Command::Recommend(args) => commands::recommend(&ctx, args),
        Command::Evaluate(args) => commands::evaluate(&ctx, args),
        Command::Xval(args) => commands::xval(&ctx, args),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("{}", err.to_json());
            ExitCode::from(err.exit_code() as u8)
        }
    }
}
