//! Command-line surface for weighted-KNN data attribution.
//!
//! Subcommands: `value` (score a training set against a validation set),
//! `eval mislabel` / `eval noise` (corrupt, score, and report detection
//! AUROC), and `bench` (runtime scaling on synthetic data).
//!
//! Exit codes: 0 on success, 2 on usage errors, 3 on data errors.

use clap::{Args, Parser, Subcommand};
use std::path::PathBuf;
use std::process::ExitCode;
use wknn_shapley::eval::{self, Direction, EvalReport, Method, RunConfig};
use wknn_shapley::io;
use wknn_shapley::{Kernel, MstarPolicy};

#[derive(Parser)]
#[command(
    name = "wknn-shapley",
    about = "Data attribution for weighted hard-label KNN classifiers",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Score training points against a validation set and write a CSV.
    Value(ValueArgs),
    /// Corrupt the training set, score it, and report detection AUROC.
    Eval(EvalArgs),
    /// Time a method across dataset sizes and fit the scaling exponent.
    Bench(BenchArgs),
}

#[derive(Args, Clone)]
struct CommonArgs {
    /// Scoring method.
    #[arg(long, value_parser = ["exact", "approx", "mc", "oracle", "unweighted_soft", "unweighted_hard"], default_value = "exact")]
    method: String,
    /// Neighborhood size K.
    #[arg(long, default_value_t = 5)]
    k: usize,
    /// Discretization bits b; weights snap to 2^b grid levels.
    #[arg(long, default_value_t = 3)]
    bits: u32,
    /// Truncation rank for --method approx: an integer, `sqrt`, or
    /// `adaptive:RATIO`.
    #[arg(long, default_value = "sqrt")]
    mstar: String,
    /// Weight kernel.
    #[arg(long, value_parser = ["rbf", "norm-dist", "uniform"], default_value = "rbf")]
    kernel: String,
    /// RNG seed for sampling-based methods and corruption.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Worker threads (0 = all cores).
    #[arg(long, default_value_t = 0)]
    workers: usize,
    /// Monte Carlo accuracy target (only --method mc).
    #[arg(long, default_value_t = 0.1)]
    epsilon: f64,
    /// Monte Carlo failure probability (only --method mc).
    #[arg(long, default_value_t = 0.1)]
    delta: f64,
}

#[derive(Args)]
struct ValueArgs {
    /// Training CSV: feature columns, then an integer `label` column.
    #[arg(long)]
    train: PathBuf,
    /// Validation CSV in the same layout.
    #[arg(long)]
    val: PathBuf,
    /// Output CSV path (stdout when omitted).
    #[arg(long)]
    out: Option<PathBuf>,
    #[command(flatten)]
    common: CommonArgs,
}

#[derive(Args)]
struct EvalArgs {
    /// Corruption to inject.
    #[arg(value_parser = ["mislabel", "noise"])]
    task: String,
    #[arg(long)]
    train: PathBuf,
    #[arg(long)]
    val: PathBuf,
    /// Fraction of training points to corrupt.
    #[arg(long, default_value_t = 0.1)]
    rate: f64,
    /// Report path (stdout when omitted); scores land next to it with a
    /// `.scores.csv` suffix.
    #[arg(long)]
    out: Option<PathBuf>,
    #[command(flatten)]
    common: CommonArgs,
}

#[derive(Args)]
struct BenchArgs {
    /// Comma-separated dataset sizes, strictly increasing.
    #[arg(long, value_delimiter = ',', default_values_t = vec![500usize, 1000, 2000, 4000])]
    sizes: Vec<usize>,
    /// Report path (stdout when omitted).
    #[arg(long)]
    out: Option<PathBuf>,
    #[command(flatten)]
    common: CommonArgs,
}

fn parse_method(common: &CommonArgs) -> Result<Method, String> {
    match common.method.as_str() {
        "exact" => Ok(Method::Exact),
        "oracle" => Ok(Method::Oracle),
        "unweighted_soft" => Ok(Method::UnweightedSoft),
        "unweighted_hard" => Ok(Method::UnweightedHard),
        "mc" => Ok(Method::MonteCarlo {
            epsilon: common.epsilon,
            delta: common.delta,
        }),
        "approx" => {
            let policy = parse_mstar(&common.mstar)?;
            Ok(Method::Approx(policy))
        }
        other => Err(format!("unknown method {other:?}")),
    }
}

fn parse_mstar(text: &str) -> Result<MstarPolicy, String> {
    if text == "sqrt" {
        return Ok(MstarPolicy::SqrtN);
    }
    if let Some(ratio) = text.strip_prefix("adaptive:") {
        let ratio: f64 = ratio
            .parse()
            .map_err(|_| format!("bad adaptive ratio {ratio:?}"))?;
        return Ok(MstarPolicy::Adaptive { ratio });
    }
    if text == "adaptive" {
        return Ok(MstarPolicy::Adaptive {
            ratio: wknn_shapley::approx::DEFAULT_ADAPTIVE_RATIO,
        });
    }
    let fixed: usize = text
        .parse()
        .map_err(|_| format!("--mstar expects an integer, `sqrt`, or `adaptive:RATIO`, got {text:?}"))?;
    Ok(MstarPolicy::Fixed(fixed))
}

fn run_config(common: &CommonArgs) -> Result<RunConfig, String> {
    Ok(RunConfig {
        method: parse_method(common)?,
        k: common.k,
        bits: common.bits,
        kernel: Kernel::parse(&common.kernel).ok_or_else(|| format!("unknown kernel {:?}", common.kernel))?,
        seed: common.seed,
        workers: common.workers,
    })
}

fn with_pool<T>(workers: usize, job: impl FnOnce() -> T + Send) -> anyhow::Result<T>
where
    T: Send,
{
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()?;
    Ok(pool.install(job))
}

fn write_or_print(path: &Option<PathBuf>, content: &str) -> anyhow::Result<()> {
    match path {
        Some(p) => std::fs::write(p, content)?,
        None => print!("{content}"),
    }
    Ok(())
}

fn cmd_value(args: &ValueArgs) -> anyhow::Result<()> {
    let cfg = run_config(&args.common).map_err(anyhow::Error::msg)?;
    let points = io::read_points(&args.train)?;
    let queries = io::read_queries(&args.val)?;
    let run = with_pool(cfg.workers, || eval::score_run(&points, &queries, &cfg))??;
    if run.uniform_fallback {
        eprintln!("warning: norm-dist kernel undefined (all distances equal); used uniform weights");
    }
    write_or_print(&args.out, &io::scores_csv_string(&run.scores))
}

fn cmd_eval(args: &EvalArgs) -> anyhow::Result<()> {
    let cfg = run_config(&args.common).map_err(anyhow::Error::msg)?;
    let points = io::read_points(&args.train)?;
    let queries = io::read_queries(&args.val)?;
    let num_classes = points
        .iter()
        .map(|p| p.label)
        .chain(queries.iter().map(|q| q.label))
        .max()
        .map_or(2, |m| (m + 1).max(2));

    let (corrupted, positives) = match args.task.as_str() {
        "mislabel" => eval::flip_labels(&points, args.rate, num_classes, cfg.seed)?,
        "noise" => eval::add_feature_noise(&points, args.rate, cfg.seed)?,
        other => anyhow::bail!("unknown eval task {other:?}"),
    };

    let run = with_pool(cfg.workers, || eval::score_run(&corrupted, &queries, &cfg))??;
    let auroc = eval::auroc(&run.scores.values, &positives, Direction::LowIsPositive)?;

    let report = EvalReport {
        method: cfg.method.name().into(),
        dataset: args.train.display().to_string(),
        n: corrupted.len(),
        k: cfg.k,
        bits: cfg.bits,
        kernel: cfg.kernel.name().into(),
        mstar: run.mstar_used,
        seed: cfg.seed,
        auroc: Some(auroc),
        query_seconds: run.query_seconds,
    };
    write_or_print(&args.out, &report.to_kv())?;
    if let Some(out) = &args.out {
        let mut scores_path = out.clone().into_os_string();
        scores_path.push(".scores.csv");
        std::fs::write(scores_path, io::scores_csv_string(&run.scores))?;
    }
    Ok(())
}

fn cmd_bench(args: &BenchArgs) -> anyhow::Result<()> {
    let cfg = run_config(&args.common).map_err(anyhow::Error::msg)?;
    let result = with_pool(cfg.workers, || eval::bench_runtime(&args.sizes, &cfg))??;
    let mut text = String::new();
    for report in &result.reports {
        text.push_str(&report.to_kv());
        text.push('\n');
    }
    text.push_str(&format!("loglog_slope={:.4}\n", result.slope));
    write_or_print(&args.out, &text)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match &cli.command {
        Command::Value(args) => cmd_value(args),
        Command::Eval(args) => cmd_eval(args),
        Command::Bench(args) => cmd_bench(args),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(3)
        }
    }
}
