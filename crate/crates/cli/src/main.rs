//! `pathreg`: find regularization ranges that reverse trends in binary data.

mod analyze;
mod svg;

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use pathreg_core::experiments::{run_experiment, timestamp_now, write_run, ExperimentKind, ExperimentSpec};
use pathreg_core::logistic::WeightScheme;
use pathreg_core::sampling::{sample_batch, Condition, SamplerConfig, Scheme, DEFAULT_MAX_REJECTS};
use pathreg_core::{ContingencyTable222, RegGrid};

/// Seed used when neither `--seed` nor `PATHREG_SEED` is given.
pub const DEFAULT_SEED: u64 = 20231114;

/// Exit code when a pathological regime was found.
const EXIT_REGIME: u8 = 3;

#[derive(Parser, Debug)]
#[command(name = "pathreg", version, about = "Find regularization ranges that reverse trends in binary data")]
struct Cli {
    /// Random seed for sampling, folds and experiments.
    #[arg(long, global = true, env = "PATHREG_SEED", default_value_t = DEFAULT_SEED)]
    seed: u64,

    /// Output root for sampled batches and experiment runs.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,

    /// Output format on standard output (default depends on the command).
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,

    /// Worker threads for experiments and batches.
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Report Simpson verdicts and pathological regimes of a table.
    Analyze(AnalyzeArgs),
    /// Emit the trend curve of one variable as CSV, optionally as SVG.
    Path(PathArgs),
    /// Draw a batch of tables into a directory.
    Sample(SampleArgs),
    /// Run a Monte-Carlo experiment.
    Experiment(ExperimentArgs),
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum Model {
    Ridge,
    Logistic,
}

#[derive(Args, Debug)]
pub struct ModelArgs {
    #[arg(long, value_enum, default_value_t = Model::Ridge)]
    pub model: Model,

    /// Ridge: fit an unpenalized intercept.
    #[arg(long)]
    pub intercept: bool,

    /// Regularization grid, e.g. `log:1e-8:1e8:200` or `0.1,1,10`.
    #[arg(long)]
    pub grid: Option<RegGrid>,

    /// Logistic: sample weighting.
    #[arg(long, default_value = "uniform")]
    pub weights: WeightScheme,
}

#[derive(Args, Debug)]
struct AnalyzeArgs {
    /// Table CSV with header `y,x1,x2,count`.
    table: PathBuf,

    #[command(flatten)]
    model: ModelArgs,
}

#[derive(Args, Debug)]
struct PathArgs {
    table: PathBuf,

    /// Variable whose trend is traced (1 or 2).
    #[arg(long)]
    var: usize,

    /// Logistic: value `j` of the conditioning event `x_var = j`.
    #[arg(long, default_value_t = 0)]
    value: usize,

    /// Also write an SVG plot to this file.
    #[arg(long)]
    svg: Option<PathBuf>,

    #[command(flatten)]
    model: ModelArgs,
}

#[derive(Args, Debug)]
struct SampleArgs {
    #[arg(long, default_value = "dirichlet_rounded")]
    scheme: Scheme,

    /// Sample size of every table.
    #[arg(short = 'n', long = "size")]
    n: u64,

    /// Number of tables.
    #[arg(short = 'm', long = "count", default_value_t = 1)]
    m: usize,

    /// Keep only Simpson tables.
    #[arg(long, conflicts_with = "non_simpson")]
    simpson: bool,

    /// Keep only non-Simpson tables.
    #[arg(long)]
    non_simpson: bool,

    #[arg(long, default_value_t = DEFAULT_MAX_REJECTS)]
    max_rejects: u64,
}

#[derive(Args, Debug)]
struct ExperimentArgs {
    /// ratio-vs-n, avg-gamma, logistic-ratios or cv-demo.
    kind: ExperimentKind,

    /// Comma-separated sample sizes.
    #[arg(long, value_delimiter = ',')]
    sizes: Option<Vec<u64>>,

    /// Tables per sample size and population.
    #[arg(short = 'm', long = "count")]
    m: Option<usize>,

    #[arg(long)]
    scheme: Option<Scheme>,

    /// Comma-separated populations: any, simpson, non-simpson.
    #[arg(long, value_delimiter = ',')]
    conditions: Option<Vec<Condition>>,

    /// Ridge: fit an unpenalized intercept.
    #[arg(long)]
    intercept: bool,

    /// Logistic ratios: sample weighting.
    #[arg(long)]
    weights: Option<WeightScheme>,

    /// Logistic: comma-separated conditioning variables.
    #[arg(long, value_delimiter = ',')]
    conditioning: Option<Vec<usize>>,

    #[arg(long)]
    grid: Option<RegGrid>,

    /// Ridge: grid scan instead of the exact criterion.
    #[arg(long)]
    numeric: bool,

    /// CV demo: number of folds.
    #[arg(long)]
    folds: Option<usize>,

    #[arg(long)]
    max_rejects: Option<u64>,

    /// Keep per-table verdicts in summary.json.
    #[arg(long)]
    keep_verdicts: bool,

    /// CV demo: table CSV.
    #[arg(long)]
    data: Option<PathBuf>,
}

fn read_table(path: &PathBuf) -> Result<ContingencyTable222> {
    ContingencyTable222::read_csv(path).with_context(|| format!("reading {}", path.display()))
}

/// Writes to standard output; a closed pipe is not an error.
fn emit(text: &str) -> Result<()> {
    use std::io::Write;
    match std::io::stdout().lock().write_all(text.as_bytes()) {
        Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => Err(e.into()),
        _ => Ok(()),
    }
}

fn print_json(value: &serde_json::Value) -> Result<()> {
    emit(&(serde_json::to_string_pretty(value)? + "\n"))
}

fn cmd_analyze(cli: &Cli, args: &AnalyzeArgs) -> Result<u8> {
    let table = read_table(&args.table)?;
    let report = analyze::analyze(&table, &args.model)?;
    match cli.format.unwrap_or(Format::Json) {
        Format::Json => print_json(&report.json)?,
        Format::Csv => emit(&report.csv)?,
    }
    if report.pathological {
        eprintln!("WARNING: some regularization values reverse a trend of this table; see `warning`");
        return Ok(EXIT_REGIME);
    }
    Ok(0)
}

fn cmd_path(cli: &Cli, args: &PathArgs) -> Result<u8> {
    let table = read_table(&args.table)?;
    let curve = analyze::curve(&table, &args.model, args.var, args.value)?;
    if let Some(file) = &args.svg {
        std::fs::write(file, svg::render(&curve)).with_context(|| format!("writing {}", file.display()))?;
    }
    match cli.format.unwrap_or(Format::Csv) {
        Format::Csv => emit(&curve.csv())?,
        Format::Json => print_json(&curve.json())?,
    }
    Ok(if curve.regime.is_empty() { 0 } else { EXIT_REGIME })
}

fn cmd_sample(cli: &Cli, args: &SampleArgs) -> Result<u8> {
    let condition = match (args.simpson, args.non_simpson) {
        (true, _) => Condition::Simpson,
        (_, true) => Condition::NonSimpson,
        _ => Condition::Any,
    };
    let cfg = SamplerConfig::new(args.scheme, args.n, cli.seed)?.with_max_rejects(args.max_rejects)?;
    let batch = sample_batch(&cfg, args.m, condition, 0)?;
    let dir = cli
        .out
        .join("samples")
        .join(format!("{}-N{}-M{}-{}-seed{}", args.scheme, args.n, args.m, condition.name(), cli.seed));
    batch.write_dir(&dir)?;
    match cli.format.unwrap_or(Format::Json) {
        Format::Json => {
            let mut v = serde_json::to_value(&batch)?;
            v["directory"] = dir.display().to_string().into();
            print_json(&v)?;
        }
        Format::Csv => {
            emit(&format!(
                "directory,scheme,N,M,seed,acceptance_rate\n{},{},{},{},{},{}\n",
                dir.display(),
                batch.scheme,
                batch.n,
                batch.m,
                batch.seed,
                batch.acceptance_rate
            ))?;
        }
    }
    Ok(0)
}

fn experiment_spec(cli: &Cli, args: &ExperimentArgs) -> ExperimentSpec {
    let mut spec = ExperimentSpec::new(args.kind, cli.seed);
    if let Some(s) = &args.sizes {
        spec.sizes = s.clone();
    }
    if let Some(m) = args.m {
        spec.m = m;
    }
    if let Some(s) = args.scheme {
        spec.scheme = s;
    }
    if let Some(c) = &args.conditions {
        spec.conditions = c.clone();
    }
    if let Some(w) = args.weights {
        spec.weights = w;
    }
    if let Some(c) = &args.conditioning {
        spec.conditioning = c.clone();
    }
    if let Some(g) = &args.grid {
        spec.grid = g.clone();
    }
    if let Some(k) = args.folds {
        spec.folds = k;
    }
    if let Some(r) = args.max_rejects {
        spec.max_rejects = r;
    }
    spec.intercept = args.intercept;
    spec.numeric = args.numeric;
    spec.keep_verdicts = args.keep_verdicts;
    spec
}

fn cmd_experiment(cli: &Cli, args: &ExperimentArgs) -> Result<u8> {
    let spec = experiment_spec(cli, args);
    spec.validate()?;
    let data = match (&args.data, spec.kind) {
        (Some(path), _) => Some(read_table(path)?.encode()?),
        (None, ExperimentKind::CvDemo) => bail!(pathreg_core::Error::InvalidSpec("cv-demo needs --data".into())),
        (None, _) => None,
    };
    let report = run_experiment(&spec, data.as_ref())?;
    let dir = write_run(&cli.out, &spec, &report, &timestamp_now())?;
    match cli.format {
        None => emit(&report.summary_table())?,
        Some(Format::Csv) => emit(&report.results_csv())?,
        Some(Format::Json) => emit(&std::fs::read_to_string(dir.join("summary.json"))?)?,
    }
    eprintln!("results written to {}", dir.display());
    Ok(0)
}

fn run(cli: &Cli) -> Result<u8> {
    if let Some(k) = cli.threads {
        rayon::ThreadPoolBuilder::new().num_threads(k).build_global().context("configuring worker threads")?;
    }
    match &cli.command {
        Command::Analyze(a) => cmd_analyze(cli, a),
        Command::Path(a) => cmd_path(cli, a),
        Command::Sample(a) => cmd_sample(cli, a),
        Command::Experiment(a) => cmd_experiment(cli, a),
    }
}

/// 1 for unreadable or malformed input, 2 for everything else.
fn error_code(err: &anyhow::Error) -> u8 {
    match err.downcast_ref::<pathreg_core::Error>() {
        Some(e) if e.is_parse() || matches!(e, pathreg_core::Error::Io(_)) => 1,
        Some(_) => 2,
        None if err.chain().any(|c| c.is::<std::io::Error>()) => 1,
        None => 2,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(error_code(&e))
        }
    }
}
