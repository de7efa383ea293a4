mod config;

use std::collections::HashSet;
use std::fs::{self, File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Duration;

use anyhow::{anyhow, Context};
use clap::builder::{PossibleValuesParser, TypedValueParser};
use clap::{Args, Parser, Subcommand, ValueEnum};
use mcqeval_core::corpus::{
    load_dataset, CorpusError, DatasetManifest, Question, Section, DEFAULT_SHUFFLE_SEED,
};
use mcqeval_core::experiments::{
    read_results, Experiment, ExperimentError, ExperimentKind, ResultsLog, TrialRecord, Variant,
};
use mcqeval_core::prm::{grade_trace, sft_record, GradedTrace, PrmError};
use mcqeval_core::prompting::Condition;
use mcqeval_core::provider::{
    Backend, HttpBackend, ModelSpec, Provider, ProviderError, RecordingBackend, ReplayBackend,
    ResponseCache, RetryPolicy,
};
use mcqeval_core::report::{
    build_snapshot, render, Format, ReportError, SnapshotOptions, StatsSnapshot, TableKind,
};
use mcqeval_core::stats::ScaleTable;

use config::Config;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Exit {
    Usage = 1,
    Data = 2,
    Provider = 3,
    Incomplete = 4,
}

struct Failure {
    exit: Exit,
    error: anyhow::Error,
}

type CliResult<T> = Result<T, Failure>;

trait ExitContext<T> {
    fn exit(self, exit: Exit) -> CliResult<T>;
}

impl<T, E: Into<anyhow::Error>> ExitContext<T> for Result<T, E> {
    fn exit(self, exit: Exit) -> CliResult<T> {
        self.map_err(|e| Failure {
            exit,
            error: e.into(),
        })
    }
}

fn fail(exit: Exit, error: impl Into<anyhow::Error>) -> Failure {
    Failure {
        exit,
        error: error.into(),
    }
}

impl From<CorpusError> for Failure {
    fn from(e: CorpusError) -> Failure {
        fail(Exit::Data, e)
    }
}

impl From<ProviderError> for Failure {
    fn from(e: ProviderError) -> Failure {
        fail(Exit::Provider, e)
    }
}

impl From<ExperimentError> for Failure {
    fn from(e: ExperimentError) -> Failure {
        let exit = match &e {
            ExperimentError::Provider(_) => Exit::Provider,
            ExperimentError::Incomplete(_) => Exit::Incomplete,
            ExperimentError::InvalidArgument(_) => Exit::Usage,
            ExperimentError::Io(_) | ExperimentError::Results { .. } => Exit::Data,
        };
        fail(exit, e)
    }
}

impl From<ReportError> for Failure {
    fn from(e: ReportError) -> Failure {
        let exit = match &e {
            ReportError::NoRecords | ReportError::Incomplete(_) => Exit::Incomplete,
            _ => Exit::Data,
        };
        fail(exit, e)
    }
}

impl From<PrmError> for Failure {
    fn from(e: PrmError) -> Failure {
        let exit = match &e {
            PrmError::Judge(_) | PrmError::Unparseable { .. } => Exit::Provider,
            _ => Exit::Data,
        };
        fail(exit, e)
    }
}

#[derive(Parser)]
#[command(
    name = "mcqeval",
    version,
    about = "Evaluate reasoning models on five-choice questions"
)]
struct Cli {
    /// Increase log verbosity (-v info, -vv debug).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check a dataset against a manifest.
    Validate(DataArgs),
    /// Run an experiment and append trial records to a results file.
    Run(RunArgs),
    /// Grade thinking traces against official explanations.
    Grade(GradeArgs),
    /// Recompute every statistic from a results file.
    Stats(StatsArgs),
    /// Render a statistics snapshot as tables.
    Report(ReportArgs),
    /// Export graded traces as self-PRM training records.
    ExportSft(ExportArgs),
}

#[derive(Args)]
struct DataArgs {
    /// Line-delimited JSON question file.
    #[arg(long)]
    data: PathBuf,
    /// Built-in manifest name (official-test, pt150-159, pt140-141) or TOTAL/LR/RC.
    #[arg(long)]
    manifest: String,
}

impl DataArgs {
    fn load(&self) -> CliResult<Vec<Question>> {
        let manifest = DatasetManifest::resolve(&self.manifest)?;
        Ok(load_dataset(&self.data, &manifest)?)
    }
}

#[derive(Args)]
struct ProviderArgs {
    /// TOML file declaring models, seed, parallelism, and cache directory.
    #[arg(long)]
    config: PathBuf,
    /// Replay recorded payloads from this directory instead of calling endpoints.
    #[arg(long, value_name = "FIXTURE_DIR")]
    mock: Option<PathBuf>,
    /// Record every live payload into this directory as a replay fixture.
    #[arg(long, value_name = "FIXTURE_DIR", conflicts_with = "mock")]
    record: Option<PathBuf>,
    /// Bypass the response cache.
    #[arg(long)]
    no_cache: bool,
}

#[derive(Args)]
struct RunArgs {
    #[arg(value_parser = PossibleValuesParser::new(ExperimentKind::ALL.map(ExperimentKind::name)).map(|s| s.parse::<ExperimentKind>().unwrap()))]
    experiment: ExperimentKind,
    #[command(flatten)]
    data: DataArgs,
    #[command(flatten)]
    provider: ProviderArgs,
    /// Model id from the config; optional when it declares one model.
    #[arg(long)]
    model: Option<String>,
    /// Results file; existing trials are kept and skipped.
    #[arg(long)]
    results: PathBuf,
    /// Samples per question for self-consistency and prm-bon.
    #[arg(long, default_value_t = 5)]
    n: u32,
    /// Shuffle seed; defaults to the config value, then 20250401.
    #[arg(long)]
    seed: Option<u64>,
    /// Concurrent requests; defaults to the config value, then 1.
    #[arg(long)]
    parallelism: Option<usize>,
    /// Scorer model id for prm-bon; defaults to the config's `scorer`.
    #[arg(long)]
    scorer: Option<String>,
}

#[derive(Args)]
struct GradeArgs {
    #[command(flatten)]
    data: DataArgs,
    #[command(flatten)]
    provider: ProviderArgs,
    /// Judge model id; defaults to the config's `judge`.
    #[arg(long)]
    judge: Option<String>,
    #[arg(long)]
    results: PathBuf,
    /// Graded-trace output file; existing entries are kept and skipped.
    #[arg(long)]
    out: PathBuf,
    /// Only grade this model's traces.
    #[arg(long)]
    model: Option<String>,
}

#[derive(Args)]
struct StatsArgs {
    #[arg(long)]
    results: PathBuf,
    /// Dataset whose every question each experiment must cover.
    #[arg(long, requires = "manifest")]
    data: Option<PathBuf>,
    #[arg(long, requires = "data")]
    manifest: Option<String>,
    /// JSON object mapping raw correct counts to scaled scores.
    #[arg(long)]
    scale: Option<PathBuf>,
    /// Snapshot output; printed to stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Markdown,
    Csv,
    Json,
}

#[derive(Args)]
struct ReportArgs {
    /// Snapshot written by `stats`.
    #[arg(long)]
    stats: PathBuf,
    #[arg(long, value_enum, default_value = "markdown")]
    format: FormatArg,
    /// Tables to render (repeatable); all tables by default.
    #[arg(long = "table", value_parser = PossibleValuesParser::new(TableKind::ALL.map(TableKind::slug)).map(|s| s.parse::<TableKind>().unwrap()))]
    tables: Vec<TableKind>,
    /// Output directory; documents are printed to stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ExportArgs {
    #[command(flatten)]
    data: DataArgs,
    #[arg(long)]
    graded: PathBuf,
    #[arg(long)]
    out: PathBuf,
}

fn check_credentials(specs: &[&ModelSpec]) -> CliResult<()> {
    for spec in specs {
        if let Some(var) = &spec.api_key_env {
            if std::env::var_os(var).is_none() {
                return Err(fail(
                    Exit::Provider,
                    anyhow!(
                        "missing credential for model `{}`: environment variable {var} is not set",
                        spec.model_id
                    ),
                ));
            }
        }
    }
    Ok(())
}

fn build_provider(
    args: &ProviderArgs,
    config: &Config,
    specs: &[&ModelSpec],
) -> CliResult<Provider> {
    let timeout = Duration::from_secs(config.timeout_secs);
    let http = || HttpBackend::new(timeout).exit(Exit::Provider);
    let backend: Box<dyn Backend> = match (&args.mock, &args.record) {
        (Some(dir), _) => {
            if !dir.is_dir() {
                return Err(fail(
                    Exit::Usage,
                    anyhow!("fixture directory {} does not exist", dir.display()),
                ));
            }
            Box::new(ReplayBackend::new(dir))
        }
        (None, Some(dir)) => {
            check_credentials(specs)?;
            Box::new(RecordingBackend::new(http()?, dir))
        }
        (None, None) => {
            check_credentials(specs)?;
            Box::new(http()?)
        }
    };
    let mut provider = Provider::new(backend);
    if args.mock.is_some() {
        provider = provider.with_retry(RetryPolicy::no_delay());
    }
    if let (Some(dir), false) = (&config.cache_dir, args.no_cache) {
        provider = provider.with_cache(ResponseCache::new(dir));
    }
    Ok(provider)
}

fn load_config(path: &Path) -> CliResult<Config> {
    Config::load(path).exit(Exit::Usage)
}

fn validate(args: DataArgs) -> CliResult<()> {
    let questions = args.load()?;
    let lr = questions
        .iter()
        .filter(|q| q.section == Section::LR)
        .count();
    let explained = questions
        .iter()
        .filter(|q| q.explanations.is_some())
        .count();
    println!(
        "{}: {} questions ({lr} LR, {} RC), {explained} with explanations",
        args.data.display(),
        questions.len(),
        questions.len() - lr
    );
    Ok(())
}

fn run(args: RunArgs) -> CliResult<()> {
    let config = load_config(&args.provider.config)?;
    let questions = args.data.load()?;
    let model = config.model(args.model.as_deref()).exit(Exit::Usage)?;
    let scorer = match args.experiment {
        ExperimentKind::PrmBon => {
            let id = args
                .scorer
                .as_deref()
                .or(config.scorer.as_deref())
                .ok_or_else(|| {
                    fail(
                        Exit::Usage,
                        anyhow!(
                            "prm-bon needs a scorer: pass --scorer or set `scorer` in the config"
                        ),
                    )
                })?;
            Some(config.model(Some(id)).exit(Exit::Usage)?)
        }
        _ => None,
    };
    let mut specs = vec![model];
    specs.extend(scorer);
    let provider = build_provider(&args.provider, &config, &specs)?;
    let log = ResultsLog::open(&args.results)?;
    let experiment = Experiment {
        provider: &provider,
        model,
        questions: &questions,
        seed: args.seed.or(config.seed).unwrap_or(DEFAULT_SHUFFLE_SEED),
        parallelism: args.parallelism.or(config.parallelism).unwrap_or(1),
        log: Some(&log),
        scorer,
    };
    let records = experiment.run(args.experiment, args.n)?;
    let correct = records.iter().filter(|r| r.correct).count();
    println!(
        "{}: {} trials over {} questions for {} ({correct} correct) -> {}",
        args.experiment,
        records.len(),
        questions.len(),
        model.model_id,
        args.results.display()
    );
    Ok(())
}

fn load_results(path: &Path) -> CliResult<Vec<TrialRecord>> {
    read_results(path).map_err(|e| {
        let f = Failure::from(e);
        fail(
            f.exit,
            f.error.context(format!("reading {}", path.display())),
        )
    })
}

fn read_jsonl<T: serde::de::DeserializeOwned>(path: &Path) -> CliResult<Vec<T>> {
    let file = File::open(path)
        .with_context(|| format!("opening {}", path.display()))
        .exit(Exit::Data)?;
    let mut out = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.exit(Exit::Data)?;
        if line.trim().is_empty() {
            continue;
        }
        let value = serde_json::from_str(&line)
            .with_context(|| format!("{}:{}", path.display(), i + 1))
            .exit(Exit::Data)?;
        out.push(value);
    }
    Ok(out)
}

fn grade(args: GradeArgs) -> CliResult<()> {
    let config = load_config(&args.provider.config)?;
    let questions = args.data.load()?;
    let judge_id = args
        .judge
        .as_deref()
        .or(config.judge.as_deref())
        .ok_or_else(|| {
            fail(
                Exit::Usage,
                anyhow!("grading needs a judge: pass --judge or set `judge` in the config"),
            )
        })?;
    let judge = config.model(Some(judge_id)).exit(Exit::Usage)?;
    let provider = build_provider(&args.provider, &config, &[judge])?;
    let records = load_results(&args.results)?;

    let mut done: HashSet<(String, String, u32)> = HashSet::new();
    if args.out.exists() {
        for g in read_jsonl::<GradedTrace>(&args.out)? {
            done.insert((g.model_id, g.question_id, g.sample_index));
        }
    }
    let mut out = OpenOptions::new()
        .create(true)
        .append(true)
        .open(&args.out)
        .with_context(|| format!("opening {}", args.out.display()))
        .exit(Exit::Data)?;
    let mut graded = 0usize;
    for r in &records {
        let eligible = r.variant == Variant::Original
            && r.condition == Condition::A
            && args.model.as_deref().is_none_or(|m| m == r.model_id);
        if !eligible || !done.insert((r.model_id.clone(), r.question_id.clone(), r.sample_index)) {
            continue;
        }
        let q = questions
            .iter()
            .find(|q| q.id == r.question_id)
            .ok_or_else(|| {
                fail(
                    Exit::Data,
                    anyhow!("question {} is not in the dataset", r.question_id),
                )
            })?;
        let trace = if r.normalized.thinking.trim().is_empty() {
            &r.normalized.response
        } else {
            &r.normalized.thinking
        };
        let rubric = grade_trace(&provider, judge, q, trace)?;
        let entry = GradedTrace {
            model_id: r.model_id.clone(),
            question_id: r.question_id.clone(),
            sample_index: r.sample_index,
            trace: trace.clone(),
            rubric,
        };
        let mut line = serde_json::to_string(&entry).exit(Exit::Data)?;
        line.push('\n');
        out.write_all(line.as_bytes()).exit(Exit::Data)?;
        graded += 1;
    }
    println!("graded {graded} traces -> {}", args.out.display());
    Ok(())
}

fn stats(args: StatsArgs) -> CliResult<()> {
    let records = load_results(&args.results)?;
    let mut options = SnapshotOptions::default();
    if let (Some(data), Some(manifest)) = (args.data, args.manifest) {
        let questions = DataArgs { data, manifest }.load()?;
        options.expected_questions = Some(questions.into_iter().map(|q| q.id).collect());
    }
    if let Some(path) = &args.scale {
        let text = fs::read_to_string(path)
            .with_context(|| format!("reading {}", path.display()))
            .exit(Exit::Data)?;
        let table: ScaleTable = serde_json::from_str(&text)
            .with_context(|| format!("parsing {}", path.display()))
            .exit(Exit::Data)?;
        options.scale = Some(table);
    }
    let snapshot = build_snapshot(&records, &options)?;
    let doc = render(&snapshot, Format::Json, &[])?.remove(0);
    match &args.out {
        Some(path) => fs::write(path, doc.content)
            .with_context(|| format!("writing {}", path.display()))
            .exit(Exit::Data)?,
        None => print!("{}", doc.content),
    }
    Ok(())
}

fn report(args: ReportArgs) -> CliResult<()> {
    let text = fs::read_to_string(&args.stats)
        .with_context(|| format!("reading {}", args.stats.display()))
        .exit(Exit::Data)?;
    let snapshot: StatsSnapshot = serde_json::from_str(&text)
        .with_context(|| format!("parsing {}", args.stats.display()))
        .exit(Exit::Data)?;
    let tables = if args.tables.is_empty() {
        TableKind::ALL.to_vec()
    } else {
        args.tables
    };
    let format = match args.format {
        FormatArg::Markdown => Format::Markdown,
        FormatArg::Csv => Format::Csv,
        FormatArg::Json => Format::Json,
    };
    let docs = render(&snapshot, format, &tables)?;
    match &args.out {
        Some(dir) => {
            fs::create_dir_all(dir).exit(Exit::Data)?;
            for doc in &docs {
                let path = dir.join(&doc.name);
                fs::write(&path, &doc.content)
                    .with_context(|| format!("writing {}", path.display()))
                    .exit(Exit::Data)?;
            }
        }
        None => {
            let many = docs.len() > 1;
            for doc in &docs {
                if many {
                    println!("# {}", doc.name);
                }
                print!("{}", doc.content);
            }
        }
    }
    Ok(())
}

fn export_sft(args: ExportArgs) -> CliResult<()> {
    let questions = args.data.load()?;
    let graded: Vec<GradedTrace> = read_jsonl(&args.graded)?;
    if graded.is_empty() {
        return Err(fail(
            Exit::Incomplete,
            anyhow!("{} has no graded traces", args.graded.display()),
        ));
    }
    let mut out = String::new();
    for g in &graded {
        let q = questions
            .iter()
            .find(|q| q.id == g.question_id)
            .ok_or_else(|| {
                fail(
                    Exit::Data,
                    anyhow!("question {} is not in the dataset", g.question_id),
                )
            })?;
        out.push_str(&serde_json::to_string(&sft_record(q, g)).exit(Exit::Data)?);
        out.push('\n');
    }
    fs::write(&args.out, out)
        .with_context(|| format!("writing {}", args.out.display()))
        .exit(Exit::Data)?;
    println!(
        "exported {} records -> {}",
        graded.len(),
        args.out.display()
    );
    Ok(())
}

/// The error chain joined by ": ", skipping causes already quoted by their parent.
fn describe(error: &anyhow::Error) -> String {
    let mut out = String::new();
    for cause in error.chain() {
        let text = cause.to_string();
        if !out.contains(&text) {
            if !out.is_empty() {
                out.push_str(": ");
            }
            out.push_str(&text);
        }
    }
    out
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { Exit::Usage as u8 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    let result = match cli.command {
        Command::Validate(a) => validate(a),
        Command::Run(a) => run(a),
        Command::Grade(a) => grade(a),
        Command::Stats(a) => stats(a),
        Command::Report(a) => report(a),
        Command::ExportSft(a) => export_sft(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", describe(&f.error));
            ExitCode::from(f.exit as u8)
        }
    }
}
