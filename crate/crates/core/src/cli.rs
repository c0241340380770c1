//! Command-line front end. Every successful command prints one JSON
//! [`RunReport`] on stdout (except `generate` without `--out`, which prints
//! the CSV itself). Exit codes: 0 success, 2 usage, 3 data, 4 numeric.

use std::ffi::OsString;
use std::fs::File;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::baseline::{init_baseline, train_lms, BaselineModel, LmsConfig, LmsOutcome};
use crate::data::{self, load_csv, permutation, permute_patterns, Dataset, EncodingMap, Generator, SyntheticSpec};
use crate::error::Error;
use crate::grouping::{arrange, horizontal_shape, CombineMode, GroupingConfig, PatternOrder};
use crate::model::{train, ErrorReport, ModelFile, WaveShapeModel};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_DATA: i32 = 3;
pub const EXIT_NUMERIC: i32 = 4;

/// Weight spread below which permuted runs count as identical.
pub const PERMUTATION_SPREAD_LIMIT: f64 = 1e-9;

#[derive(Debug, Parser)]
#[command(name = "waveshape", version, about = "Wave-shape neuron and delta-rule baseline")]
pub struct Cli {
    /// Pretty-print JSON output
    #[arg(long, global = true)]
    pub pretty: bool,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Train one model on a CSV dataset
    Train(TrainArgs),
    /// Train both models on a shared split and report errors side by side
    Compare(CompareArgs),
    /// Retrain on seeded pattern-order permutations and report weight spread
    PermuteTest(PermuteArgs),
    /// Emit a synthetic dataset as CSV
    Generate(GenerateArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    Waveshape,
    Baseline,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct DataArgs {
    /// CSV file with one `output:` column
    #[arg(long)]
    pub data: PathBuf,
    /// Extra categorical token, as TOKEN=VALUE (repeatable)
    #[arg(long = "encode", value_name = "TOKEN=VALUE")]
    pub encode: Vec<String>,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct GroupingArgs {
    #[arg(long, value_enum, default_value = "sum")]
    pub combine: CombineArg,
    #[arg(long, default_value_t = 10)]
    pub max_exhaustive: usize,
    /// Per-group penalty; defaults to 0.01 * (target shape change average + 1)
    #[arg(long)]
    pub penalty: Option<f64>,
    /// Allow inputs to be left out of every group
    #[arg(long)]
    pub allow_drop: bool,
    /// Treat mirrored shapes as different
    #[arg(long)]
    pub no_sign_aware: bool,
    #[arg(long, value_enum, default_value = "canonical")]
    pub order: OrderArg,
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CombineArg {
    Sum,
    Mean,
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum OrderArg {
    Canonical,
    Presented,
}

impl GroupingArgs {
    pub fn config(&self) -> GroupingConfig {
        GroupingConfig {
            combine_mode: match self.combine {
                CombineArg::Sum => CombineMode::Sum,
                CombineArg::Mean => CombineMode::Mean,
            },
            max_exhaustive_inputs: self.max_exhaustive,
            group_count_penalty: self.penalty,
            allow_drop: self.allow_drop,
            sign_aware: !self.no_sign_aware,
            pattern_order: match self.order {
                OrderArg::Canonical => PatternOrder::Canonical,
                OrderArg::Presented => PatternOrder::Presented,
            },
        }
    }
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct LmsArgs {
    #[arg(long, default_value_t = 0.05)]
    pub lr: f64,
    #[arg(long, default_value_t = 500)]
    pub epochs: usize,
    /// One averaged update per epoch instead of one per pattern
    #[arg(long)]
    pub batch: bool,
    /// Seed for the baseline's initial weights
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    /// Initial weights are uniform on [-scale, scale]
    #[arg(long, default_value_t = 0.5)]
    pub scale: f64,
}

impl LmsArgs {
    fn config(&self) -> LmsConfig {
        LmsConfig {
            learning_rate: self.lr,
            epochs: self.epochs,
            batch: self.batch,
        }
    }
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct TrainArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[arg(long, value_enum)]
    pub model: ModelKind,
    /// Write the trained model JSON here
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[command(flatten)]
    pub grouping: GroupingArgs,
    #[command(flatten)]
    pub lms: LmsArgs,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct CompareArgs {
    #[command(flatten)]
    pub data: DataArgs,
    /// Fraction of patterns held out after a seeded shuffle
    #[arg(long, default_value_t = 0.25)]
    pub holdout: f64,
    #[arg(long, default_value_t = 0)]
    pub split_seed: u64,
    #[command(flatten)]
    pub grouping: GroupingArgs,
    #[command(flatten)]
    pub lms: LmsArgs,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct PermuteArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[arg(long, default_value_t = 100)]
    pub trials: usize,
    /// Base seed; trial t uses seed + t
    #[arg(long = "perm-seed", default_value_t = 0)]
    pub perm_seed: u64,
    #[arg(long, value_enum, default_value = "waveshape")]
    pub model: ModelKind,
    #[command(flatten)]
    pub grouping: GroupingArgs,
    #[command(flatten)]
    pub lms: LmsArgs,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct GenerateArgs {
    #[arg(long)]
    pub arity: usize,
    #[arg(long)]
    pub patterns: usize,
    #[arg(long, value_enum, default_value = "random-linear")]
    pub generator: GeneratorArg,
    #[arg(long, default_value_t = -1.0, allow_hyphen_values = true)]
    pub coef_min: f64,
    #[arg(long, default_value_t = 1.0, allow_hyphen_values = true)]
    pub coef_max: f64,
    #[arg(long, default_value_t = 0.0)]
    pub noise_sd: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum GeneratorArg {
    RandomLinear,
    RandomUniform,
}

impl GenerateArgs {
    pub fn spec(&self) -> SyntheticSpec {
        SyntheticSpec {
            arity: self.arity,
            n_patterns: self.patterns,
            generator: match self.generator {
                GeneratorArg::RandomLinear => Generator::RandomLinear,
                GeneratorArg::RandomUniform => Generator::RandomUniform,
            },
            coefficient_range: (self.coef_min, self.coef_max),
            noise_sd: self.noise_sd,
            seed: self.seed,
        }
    }
}

/// One command's machine-readable outcome.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub command: String,
    pub argv: Vec<String>,
    pub tool_version: String,
    pub config: Value,
    pub model: Value,
    pub results: Value,
    pub duration_ms: f64,
}

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Data(String),
    Numeric(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            CliError::Data(_) => EXIT_DATA,
            CliError::Numeric(_) => EXIT_NUMERIC,
        }
    }

    fn message(&self) -> &str {
        match self {
            CliError::Usage(m) | CliError::Data(m) | CliError::Numeric(m) => m,
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::Diverged => CliError::Numeric(e.to_string()),
            Error::InvalidConfig(_) | Error::TooManyInputs { .. } => CliError::Usage(e.to_string()),
            _ => CliError::Data(e.to_string()),
        }
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

/// What a command produced: the report plus an optional non-zero exit that
/// still carries a report (a failed permutation check).
struct Outcome {
    report: Option<RunReport>,
    exit: i32,
}

/// Parses `argv` (including the program name), runs the command and returns
/// the process exit code. Stdout and stderr are injected for testing.
pub fn run<I, T>(argv: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let argv: Vec<OsString> = argv.into_iter().map(Into::into).collect();
    let cli = match Cli::try_parse_from(&argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let rendered = e.render().to_string();
            if code == EXIT_OK {
                let _ = write!(stdout, "{rendered}");
            } else {
                let _ = write!(stderr, "{rendered}");
            }
            return code;
        }
    };
    configure_threads();
    let echo: Vec<String> = argv.iter().map(|a| a.to_string_lossy().into_owned()).collect();
    let start = Instant::now();

    let outcome = match &cli.command {
        Command::Train(args) => cmd_train(args, &echo),
        Command::Compare(args) => cmd_compare(args, &echo),
        Command::PermuteTest(args) => cmd_permute_test(args, &echo),
        Command::Generate(args) => cmd_generate(args, &echo, stdout),
    };
    match outcome {
        Ok(Outcome { report, exit }) => {
            if let Some(mut report) = report {
                report.duration_ms = start.elapsed().as_secs_f64() * 1e3;
                let text = if cli.pretty {
                    serde_json::to_string_pretty(&report)
                } else {
                    serde_json::to_string(&report)
                }
                .expect("report serializes");
                if writeln!(stdout, "{text}").is_err() {
                    return EXIT_DATA;
                }
            }
            exit
        }
        Err(e) => {
            let _ = writeln!(stderr, "error: {}", e.message());
            e.exit_code()
        }
    }
}

/// Caps rayon's pool from `WAVESHAPE_THREADS` (unset or 0 = automatic).
fn configure_threads() {
    let threads = std::env::var("WAVESHAPE_THREADS")
        .ok()
        .and_then(|v| v.trim().parse::<usize>().ok())
        .unwrap_or(0);
    if threads > 0 {
        // Fails only if the global pool already exists, which is fine.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(threads).build_global();
    }
}

fn encoding(args: &DataArgs) -> CliResult<EncodingMap> {
    let mut map = EncodingMap::default();
    for entry in &args.encode {
        let (token, value) = entry
            .split_once('=')
            .ok_or_else(|| CliError::Usage(format!("--encode expects TOKEN=VALUE, got {entry:?}")))?;
        let value: f64 = value
            .trim()
            .parse()
            .map_err(|_| CliError::Usage(format!("--encode value for {token:?} is not a number")))?;
        map.insert(token.trim(), value)?;
    }
    Ok(map)
}

fn load(args: &DataArgs) -> CliResult<Dataset> {
    let map = encoding(args)?;
    let file = File::open(&args.data)
        .map_err(|e| CliError::Data(format!("{}: {e}", args.data.display())))?;
    Ok(load_csv(std::io::BufReader::new(file), &map)?)
}

fn write_file(path: &Path, contents: &[u8]) -> CliResult<()> {
    std::fs::write(path, contents).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))
}

fn report(command: &str, echo: &[String], config: Value, model: Value, results: Value) -> RunReport {
    RunReport {
        command: command.to_string(),
        argv: echo.to_vec(),
        tool_version: env!("CARGO_PKG_VERSION").to_string(),
        config,
        model,
        results,
        duration_ms: 0.0,
    }
}

fn grouping_echo(args: &GroupingArgs, dataset: &Dataset) -> CliResult<Value> {
    let config = args.config();
    config.validate()?;
    let arranged = arrange(dataset, config.pattern_order);
    let penalty = if dataset.len() >= 2 {
        Some(config.resolved_penalty(&arranged)?)
    } else {
        None
    };
    Ok(json!({ "grouping": config, "resolved_penalty": penalty }))
}

pub fn waveshape_summary(model: &WaveShapeModel, dataset: &Dataset) -> Value {
    let names = dataset.input_names();
    let groups: Vec<Value> = model
        .synapses
        .iter()
        .map(|s| {
            json!({
                "inputs": s.group.indices().iter().map(|&i| names[i].clone()).collect::<Vec<_>>(),
                "indices": s.group.indices(),
                "weight": s.weight,
                "signal_mean": s.signal_mean,
                "degenerate": s.degenerate,
            })
        })
        .collect();
    let horizontal: Vec<Option<Vec<f64>>> = dataset
        .patterns()
        .iter()
        .map(|p| horizontal_shape(&p.inputs).ok().map(|s| s.into_inner()))
        .collect();
    json!({
        "kind": "waveshape",
        "groups": groups,
        "dropped": model.dropped().iter().map(|&i| names[i].clone()).collect::<Vec<_>>(),
        "output_mean": model.output_mean,
        "horizontal_shapes": horizontal,
        "file": serde_json::to_value(ModelFile::Waveshape(model.clone())).expect("model serializes"),
    })
}

pub fn baseline_summary(outcome: &LmsOutcome, dataset: &Dataset) -> Value {
    let m = &outcome.model;
    let named: serde_json::Map<String, Value> = dataset
        .input_names()
        .iter()
        .zip(&m.weights)
        .map(|(n, w)| (n.clone(), json!(w)))
        .collect();
    json!({
        "kind": "baseline",
        "weights": m.weights,
        "named_weights": named,
        "bias": m.bias,
        "seed": m.seed,
        "mse_trajectory": outcome.mse_trajectory,
        "file": serde_json::to_value(ModelFile::Baseline(m.clone())).expect("model serializes"),
    })
}

fn fit_baseline(args: &LmsArgs, dataset: &Dataset) -> CliResult<LmsOutcome> {
    let start = init_baseline(dataset.arity(), args.seed, args.scale)?;
    Ok(train_lms(&start, dataset, &args.config())?)
}

fn cmd_train(args: &TrainArgs, echo: &[String]) -> CliResult<Outcome> {
    let dataset = load(&args.data)?;
    let config = json!({
        "args": args,
        "grouping": grouping_echo(&args.grouping, &dataset)?,
        "lms": args.lms.config(),
    });
    let (summary, file, train_report) = match args.model {
        ModelKind::Waveshape => {
            let model = train(&dataset, &args.grouping.config())?;
            let errors = model.evaluate(&dataset)?;
            (waveshape_summary(&model, &dataset), ModelFile::Waveshape(model), errors)
        }
        ModelKind::Baseline => {
            let outcome = fit_baseline(&args.lms, &dataset)?;
            let errors = outcome.model.evaluate(&dataset)?;
            (baseline_summary(&outcome, &dataset), ModelFile::Baseline(outcome.model), errors)
        }
    };
    if let Some(path) = &args.out {
        write_file(path, file.to_json().as_bytes())?;
    }
    Ok(Outcome {
        report: Some(report("train", echo, config, summary, json!({ "train": train_report }))),
        exit: EXIT_OK,
    })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SideBySide {
    pub train: ErrorReport,
    pub holdout: Option<ErrorReport>,
}

fn cmd_compare(args: &CompareArgs, echo: &[String]) -> CliResult<Outcome> {
    if !(0.0..1.0).contains(&args.holdout) {
        return Err(CliError::Usage("--holdout must be in [0, 1)".into()));
    }
    let dataset = load(&args.data)?;
    let shuffled = dataset.reordered(&permutation(dataset.len(), args.split_seed));
    let n_holdout = (dataset.len() as f64 * args.holdout).round() as usize;
    let (train_set, holdout_set) = shuffled.split_at(dataset.len() - n_holdout);
    let train_set = train_set.ok_or_else(|| CliError::Data("training split is empty".into()))?;

    let model = train(&train_set, &args.grouping.config())?;
    let outcome = fit_baseline(&args.lms, &train_set)?;

    let wave = SideBySide {
        train: model.evaluate(&train_set)?,
        holdout: holdout_set.as_ref().map(|h| model.evaluate(h)).transpose()?,
    };
    let base = SideBySide {
        train: outcome.model.evaluate(&train_set)?,
        holdout: holdout_set.as_ref().map(|h| outcome.model.evaluate(h)).transpose()?,
    };
    let config = json!({
        "args": args,
        "grouping": grouping_echo(&args.grouping, &train_set)?,
        "lms": args.lms.config(),
    });
    let models = json!({
        "waveshape": waveshape_summary(&model, &train_set),
        "baseline": baseline_summary(&outcome, &train_set),
    });
    let results = json!({
        "n_train": train_set.len(),
        "n_holdout": holdout_set.as_ref().map_or(0, |h| h.len()),
        "waveshape": wave,
        "baseline": base,
    });
    Ok(Outcome {
        report: Some(report("compare", echo, config, models, results)),
        exit: EXIT_OK,
    })
}

/// Largest per-coordinate range across runs; `None` if the runs do not all
/// have the same length.
fn spread(runs: &[Vec<f64>]) -> Option<f64> {
    let first = runs.first()?;
    if runs.iter().any(|r| r.len() != first.len()) {
        return None;
    }
    let mut worst: f64 = 0.0;
    for i in 0..first.len() {
        let (lo, hi) = runs
            .iter()
            .map(|r| r[i])
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)));
        worst = worst.max(hi - lo);
    }
    Some(worst)
}

fn cmd_permute_test(args: &PermuteArgs, echo: &[String]) -> CliResult<Outcome> {
    if args.trials < 1 {
        return Err(CliError::Usage("--trials must be at least 1".into()));
    }
    let dataset = load(&args.data)?;
    let config = json!({
        "args": args,
        "grouping": grouping_echo(&args.grouping, &dataset)?,
        "lms": args.lms.config(),
    });
    let permuted = |t: usize| permute_patterns(&dataset, args.perm_seed.wrapping_add(t as u64));

    let (results, exit) = match args.model {
        ModelKind::Waveshape => {
            let grouping = args.grouping.config();
            let mut groupings = Vec::with_capacity(args.trials);
            let mut weights = Vec::with_capacity(args.trials);
            for t in 0..args.trials {
                let model = train(&permuted(t), &grouping)?;
                groupings.push(model.synapses.iter().map(|s| s.group.clone()).collect::<Vec<_>>());
                weights.push(model.synapses.iter().map(|s| s.weight).collect::<Vec<_>>());
            }
            let identical = groupings.iter().all(|g| *g == groupings[0]);
            let weight_spread = if identical { spread(&weights) } else { None };
            let pass = identical && weight_spread.is_some_and(|s| s < PERMUTATION_SPREAD_LIMIT);
            (
                json!({
                    "model": "waveshape",
                    "trials": args.trials,
                    "identical_groupings": identical,
                    "weight_spread": weight_spread,
                    "spread_limit": PERMUTATION_SPREAD_LIMIT,
                    "pass": pass,
                }),
                if pass { EXIT_OK } else { EXIT_NUMERIC },
            )
        }
        ModelKind::Baseline => {
            let start = init_baseline(dataset.arity(), args.lms.seed, args.lms.scale)?;
            let mut weights = Vec::with_capacity(args.trials);
            for t in 0..args.trials {
                let m: BaselineModel = train_lms(&start, &permuted(t), &args.lms.config())?.model;
                let mut w = m.weights;
                w.push(m.bias);
                weights.push(w);
            }
            // Per-pattern updates depend on presentation order; reported, not asserted.
            (
                json!({
                    "model": "baseline",
                    "trials": args.trials,
                    "batch": args.lms.batch,
                    "weight_spread": spread(&weights),
                }),
                EXIT_OK,
            )
        }
    };
    Ok(Outcome {
        report: Some(report("permute-test", echo, config, Value::Null, results)),
        exit,
    })
}

fn cmd_generate(args: &GenerateArgs, echo: &[String], stdout: &mut dyn Write) -> CliResult<Outcome> {
    let spec = args.spec();
    spec.validate()?;
    let dataset = data::generate(&spec)?;
    let mut csv = Vec::new();
    data::write_csv(&dataset, &mut csv)?;
    match &args.out {
        Some(path) => {
            write_file(path, &csv)?;
            let results = json!({ "path": path, "patterns": dataset.len(), "arity": dataset.arity() });
            Ok(Outcome {
                report: Some(report("generate", echo, json!({ "args": args, "spec": spec }), Value::Null, results)),
                exit: EXIT_OK,
            })
        }
        None => {
            stdout
                .write_all(&csv)
                .map_err(|e| CliError::Data(format!("stdout: {e}")))?;
            Ok(Outcome { report: None, exit: EXIT_OK })
        }
    }
}
