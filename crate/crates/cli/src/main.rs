//! `gbe`: detect and explain structural changes in basket time series.

use std::collections::BTreeSet;
use std::fs::{self, File};
use std::io::{self, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use gbe_core::dataset::{restrict_category, write_csv, write_proportions_csv};
use gbe_core::eval::{
    paired_t_test_one_sided, precision_recall_f1, read_alert_weeks, read_topic_vectors, top_weeks,
    topic_change_scores, EvalReport,
};
use gbe_core::gbe::{analyze_window, gbe_series, ChangeScoreSeries};
use gbe_core::graph::export_graph;
use gbe_core::rankchange::rank_change_series;
use gbe_core::synth::{generate, PhaseConfig};
use gbe_core::{DetectionParams, GraphFormat, InputFormat, WeeklyDataset};

#[derive(Parser)]
#[command(
    name = "gbe",
    version,
    about = "Graph-based entropy change detection for basket data"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Weekly entropy, change score and alerts (`scores.csv`).
    Detect(DetectArgs),
    /// Weekly top-R rank-change scores and reference alerts (`rank_change.csv`).
    Rankscore(RankArgs),
    /// Precision/recall/F1 of alert weeks, or a paired t-test over reports.
    Eval(EvalArgs),
    /// Co-occurrence graph snapshots for a range of weeks.
    Graph(GraphArgs),
    /// Generate a synthetic dataset from a phase schedule.
    Synth(SynthArgs),
    /// Per-week item proportion features (`proportions.csv`).
    Features(FeatureArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Csv,
    Jsonl,
}

#[derive(Clone, Copy, ValueEnum)]
enum GraphFormatArg {
    Dot,
    Json,
}

#[derive(Clone, Copy, ValueEnum)]
enum Metric {
    Precision,
    Recall,
    F1,
}

#[derive(Args)]
struct InputArgs {
    /// Basket file.
    #[arg(long)]
    input: PathBuf,
    #[arg(long, value_enum, default_value = "csv")]
    format: FormatArg,
    /// File listing the item identifiers to keep, one per line.
    #[arg(long)]
    category: Option<PathBuf>,
}

#[derive(Args)]
struct DetectionArgs {
    /// Edge density in (0, 1].
    #[arg(long, default_value_t = 0.06)]
    rho: f64,
    /// Window length in weeks.
    #[arg(long = "delta-t", default_value_t = 4)]
    delta_t: u32,
    #[arg(long = "log-base", default_value_t = 2.0)]
    log_base: f64,
}

impl DetectionArgs {
    fn params(&self, theta_r: Option<usize>) -> DetectionParams {
        DetectionParams {
            rho: self.rho,
            delta_t: self.delta_t,
            theta_r,
            log_base: self.log_base,
        }
    }
}

#[derive(Args)]
struct DetectArgs {
    #[command(flatten)]
    input: InputArgs,
    #[command(flatten)]
    detection: DetectionArgs,
    /// Number of alert weeks. Defaults to the number of rank-change alerts.
    #[arg(long = "theta-r")]
    theta_r: Option<usize>,
    /// R for the rank-change reference used to default --theta-r.
    #[arg(long = "top-r", default_value_t = 10)]
    top_r: usize,
    /// Write `scores.csv` here instead of standard output.
    #[arg(long = "output-dir")]
    output_dir: Option<PathBuf>,
    /// Also write a DOT snapshot for every alert week (needs --output-dir).
    #[arg(long, requires = "output_dir")]
    graphs: bool,
}

#[derive(Args)]
struct RankArgs {
    #[command(flatten)]
    input: InputArgs,
    #[arg(long = "top-r", default_value_t = 10)]
    top_r: usize,
    #[arg(long = "output-dir")]
    output_dir: Option<PathBuf>,
}

#[derive(Args)]
struct EvalArgs {
    /// Alert CSV of the method under test (e.g. `scores.csv`).
    #[arg(long, conflicts_with = "topics")]
    method: Option<PathBuf>,
    /// Per-week topic vectors; their top --theta-r change weeks are the method alerts.
    #[arg(long)]
    topics: Option<PathBuf>,
    /// Reference alert CSV (e.g. `rank_change.csv`).
    #[arg(long)]
    real: Option<PathBuf>,
    /// Alert count for --topics. Defaults to the number of reference alerts.
    #[arg(long = "theta-r")]
    theta_r: Option<usize>,
    /// Eval report JSON files of method X, paired in order with --y-reports.
    #[arg(long = "x-reports", value_delimiter = ',', requires = "y_reports")]
    x_reports: Vec<PathBuf>,
    #[arg(long = "y-reports", value_delimiter = ',', requires = "x_reports")]
    y_reports: Vec<PathBuf>,
    #[arg(long, value_enum, default_value = "precision")]
    metric: Metric,
    #[arg(long = "output-dir")]
    output_dir: Option<PathBuf>,
}

#[derive(Args)]
struct GraphArgs {
    #[command(flatten)]
    input: InputArgs,
    #[command(flatten)]
    detection: DetectionArgs,
    /// Inclusive week range `a:b`.
    #[arg(long)]
    weeks: String,
    #[arg(long = "graph-format", value_enum, default_value = "dot")]
    graph_format: GraphFormatArg,
    #[arg(long = "output-dir")]
    output_dir: PathBuf,
}

#[derive(Args)]
struct SynthArgs {
    /// JSON list of phase configurations.
    #[arg(long)]
    schedule: PathBuf,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long = "n-items", default_value_t = 40)]
    n_items: usize,
    #[arg(long = "baskets-per-week", default_value_t = 300)]
    baskets_per_week: usize,
    #[arg(long = "output-dir")]
    output_dir: PathBuf,
}

#[derive(Args)]
struct FeatureArgs {
    #[command(flatten)]
    input: InputArgs,
    #[arg(long = "output-dir")]
    output_dir: Option<PathBuf>,
}

#[derive(Debug)]
enum CliError {
    /// Bad data or parameters: exit code 1.
    Invalid(String),
    /// Filesystem trouble: exit code 2.
    Io(String),
}

impl CliError {
    fn io(path: &Path, err: io::Error) -> Self {
        CliError::Io(format!("{}: {err}", path.display()))
    }
}

impl From<gbe_core::Error> for CliError {
    fn from(err: gbe_core::Error) -> Self {
        match err {
            gbe_core::Error::Io(e) => CliError::Io(e.to_string()),
            other => CliError::Invalid(other.to_string()),
        }
    }
}

type CliResult<T> = Result<T, CliError>;

fn open(path: &Path) -> CliResult<BufReader<File>> {
    File::open(path)
        .map(BufReader::new)
        .map_err(|e| CliError::io(path, e))
}

fn load_dataset(args: &InputArgs) -> CliResult<WeeklyDataset> {
    let format = match args.format {
        FormatArg::Csv => InputFormat::Csv,
        FormatArg::Jsonl => InputFormat::Jsonl,
    };
    let ds = gbe_core::parse_baskets(open(&args.input)?, format).map_err(|e| match e {
        gbe_core::Error::Io(io) => CliError::io(&args.input, io),
        other => CliError::Invalid(format!("{}: {other}", args.input.display())),
    })?;
    let Some(path) = &args.category else {
        return Ok(ds);
    };
    let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    let keep: BTreeSet<String> = text
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty())
        .map(String::from)
        .collect();
    Ok(restrict_category(&ds, &keep)?)
}

/// Writes into `dir/name`, or standard output when `dir` is `None`.
fn emit<F>(dir: Option<&Path>, name: &str, write: F) -> CliResult<()>
where
    F: FnOnce(&mut dyn Write) -> gbe_core::Result<()>,
{
    match dir {
        Some(dir) => {
            fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
            let path = dir.join(name);
            let file = File::create(&path).map_err(|e| CliError::io(&path, e))?;
            let mut out = BufWriter::new(file);
            write(&mut out)?;
            out.flush().map_err(|e| CliError::io(&path, e))
        }
        None => {
            let stdout = io::stdout();
            let mut out = stdout.lock();
            write(&mut out)?;
            out.flush().map_err(|e| CliError::Io(e.to_string()))
        }
    }
}

fn emit_json<T: serde::Serialize>(dir: Option<&Path>, name: &str, value: &T) -> CliResult<()> {
    let mut text = serde_json::to_string_pretty(value)
        .map_err(|e| CliError::Invalid(format!("cannot serialise output: {e}")))?;
    text.push('\n');
    emit(dir, name, |out| Ok(out.write_all(text.as_bytes())?))
}

fn graph_file_name(week: u32, format: GraphFormat) -> String {
    match format {
        GraphFormat::Dot => format!("graph_w{week:03}.dot"),
        GraphFormat::Json => format!("graph_w{week:03}.json"),
    }
}

fn write_graphs(
    ds: &WeeklyDataset,
    weeks: &[u32],
    params: &DetectionParams,
    format: GraphFormat,
    dir: &Path,
) -> CliResult<()> {
    for &week in weeks {
        let analysis = analyze_window(ds, week, params)?;
        let text = export_graph(&analysis.graph, &analysis.partition, ds.catalog(), format)?;
        emit(Some(dir), &graph_file_name(week, format), |out| {
            Ok(out.write_all(text.as_bytes())?)
        })?;
    }
    Ok(())
}

fn run_detect(args: &DetectArgs) -> CliResult<()> {
    let ds = load_dataset(&args.input)?;
    let theta_r = match args.theta_r {
        Some(0) => return Err(CliError::Invalid("--theta-r must be at least 1".into())),
        Some(theta) => theta,
        None => rank_change_series(&ds, args.top_r)?.alert_weeks().len(),
    };
    let params = args.detection.params(None);
    params.validate()?;
    let hg = gbe_series(&ds, &params)?;
    let series = ChangeScoreSeries::from_entropy(hg, params.delta_t, theta_r)?;
    let dir = args.output_dir.as_deref();
    emit(dir, "scores.csv", |out| series.write_csv(out))?;
    if let (true, Some(dir)) = (args.graphs, dir) {
        write_graphs(&ds, &series.alert_weeks(), &params, GraphFormat::Dot, dir)?;
    }
    Ok(())
}

fn run_rankscore(args: &RankArgs) -> CliResult<()> {
    let ds = load_dataset(&args.input)?;
    let series = rank_change_series(&ds, args.top_r)?;
    emit(args.output_dir.as_deref(), "rank_change.csv", |out| {
        series.write_csv(out)
    })
}

fn read_report(path: &Path) -> CliResult<EvalReport> {
    serde_json::from_reader(open(path)?)
        .map_err(|e| CliError::Invalid(format!("{}: {e}", path.display())))
}

fn run_eval(args: &EvalArgs) -> CliResult<()> {
    let dir = args.output_dir.as_deref();
    if !args.x_reports.is_empty() {
        let metric = match args.metric {
            Metric::Precision => "precision",
            Metric::Recall => "recall",
            Metric::F1 => "f1",
        };
        let collect = |paths: &[PathBuf]| -> CliResult<Vec<f64>> {
            paths
                .iter()
                .map(|p| Ok(read_report(p)?.metric(metric).expect("known metric")))
                .collect()
        };
        let test = paired_t_test_one_sided(&collect(&args.x_reports)?, &collect(&args.y_reports)?)?;
        return emit_json(dir, "ttest.json", &test);
    }

    let real_path = args
        .real
        .as_ref()
        .ok_or_else(|| CliError::Invalid("--real is required".into()))?;
    let real = read_alert_weeks(open(real_path)?)?;
    let method = match (&args.method, &args.topics) {
        (Some(path), _) => read_alert_weeks(open(path)?)?,
        (None, Some(path)) => {
            let scores = topic_change_scores(&read_topic_vectors(open(path)?)?)?;
            top_weeks(&scores, args.theta_r.unwrap_or(real.len()))
        }
        (None, None) => {
            return Err(CliError::Invalid(
                "one of --method or --topics is required".into(),
            ))
        }
    };
    emit_json(
        dir,
        "eval_report.json",
        &precision_recall_f1(&method, &real),
    )
}

fn parse_week_range(text: &str) -> CliResult<(u32, u32)> {
    let bad = || {
        CliError::Invalid(format!(
            "--weeks expects `a:b` with 1 <= a <= b, got {text:?}"
        ))
    };
    let (a, b) = text.split_once(':').ok_or_else(bad)?;
    let a: u32 = a.trim().parse().map_err(|_| bad())?;
    let b: u32 = b.trim().parse().map_err(|_| bad())?;
    if a == 0 || a > b {
        return Err(bad());
    }
    Ok((a, b))
}

fn run_graph(args: &GraphArgs) -> CliResult<()> {
    let (first, last) = parse_week_range(&args.weeks)?;
    let ds = load_dataset(&args.input)?;
    if last > ds.horizon() {
        return Err(CliError::Invalid(format!(
            "week {last} is beyond the last week {}",
            ds.horizon()
        )));
    }
    let params = args.detection.params(None);
    params.validate()?;
    let format = match args.graph_format {
        GraphFormatArg::Dot => GraphFormat::Dot,
        GraphFormatArg::Json => GraphFormat::Json,
    };
    let weeks: Vec<u32> = (first..=last).collect();
    write_graphs(&ds, &weeks, &params, format, &args.output_dir)
}

fn run_synth(args: &SynthArgs) -> CliResult<()> {
    let schedule: Vec<PhaseConfig> = serde_json::from_reader(open(&args.schedule)?)
        .map_err(|e| CliError::Invalid(format!("{}: {e}", args.schedule.display())))?;
    let (ds, truth) = generate(&schedule, args.n_items, args.baskets_per_week, args.seed)?;
    let dir = Some(args.output_dir.as_path());
    emit(dir, "dataset.csv", |out| write_csv(&ds, out))?;
    emit_json(dir, "ground_truth.json", &truth)
}

fn run_features(args: &FeatureArgs) -> CliResult<()> {
    let ds = load_dataset(&args.input)?;
    emit(args.output_dir.as_deref(), "proportions.csv", |out| {
        write_proportions_csv(&ds, out)
    })
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            let _ = err.print();
            return if err.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    let result = match &cli.command {
        Command::Detect(args) => run_detect(args),
        Command::Rankscore(args) => run_rankscore(args),
        Command::Eval(args) => run_eval(args),
        Command::Graph(args) => run_graph(args),
        Command::Synth(args) => run_synth(args),
        Command::Features(args) => run_features(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Invalid(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(CliError::Io(msg)) => {
            eprintln!("i/o error: {msg}");
            ExitCode::from(2)
        }
    }
}
