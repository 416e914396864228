mod commands;

use clap::{Args, Parser, Subcommand};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "bivboost", version, about = "Boosting for bivariate distributional regression")]
struct Cli {
    /// Worker threads (default: all cores).
    #[arg(long, global = true, env = "BIVBOOST_THREADS")]
    threads: Option<usize>,

    /// Log progress to stderr.
    #[arg(short, long, global = true)]
    verbose: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Fit a model from a config file and a training CSV.
    Fit(FitArgs),
    /// Write predictors, distribution parameters and means for new data.
    Predict(PredictArgs),
    /// Score a model's predictive distributions on labelled data.
    Score(ScoreArgs),
    /// Draw one of the built-in simulation scenarios.
    Simulate(SimulateArgs),
    /// Export partial effects on a grid, one CSV per learner.
    Effects(EffectsArgs),
    /// Selection frequency of every base-learner up to the stopping iteration.
    Freqs(FreqsArgs),
}

#[derive(Args)]
pub struct FitArgs {
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    train: PathBuf,
    /// Validation CSV; overrides the config's validation setting.
    #[arg(long)]
    validation: Option<PathBuf>,
    /// Model file to write.
    #[arg(long, short)]
    out: PathBuf,
    /// Risk trace CSV (default: next to the model file).
    #[arg(long)]
    trace: Option<PathBuf>,
    #[arg(long)]
    m_max: Option<usize>,
    /// Seed for a random validation split; overrides the config.
    #[arg(long, env = "BIVBOOST_SEED")]
    seed: Option<u64>,
}

#[derive(Args)]
pub struct PredictArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    data: PathBuf,
    /// Output CSV (default: stdout).
    #[arg(long, short)]
    out: Option<PathBuf>,
    /// Columns read as region labels.
    #[arg(long, value_delimiter = ',')]
    categorical: Vec<String>,
}

#[derive(Clone, Copy, clap::ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Args)]
pub struct ScoreArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    data: PathBuf,
    /// Response columns (default: the ones used for fitting).
    #[arg(long, value_delimiter = ',', num_args = 2)]
    responses: Option<Vec<String>>,
    #[arg(long, value_delimiter = ',')]
    categorical: Vec<String>,
    /// Comma-separated subset of auc, brier, msep, nll, energy.
    #[arg(long, value_delimiter = ',')]
    metrics: Option<Vec<String>>,
    #[arg(long, default_value_t = bivboost::scoring::DEFAULT_MC_SAMPLES)]
    mc_samples: usize,
    #[arg(long, env = "BIVBOOST_SEED", default_value_t = 1)]
    seed: u64,
    #[arg(long, value_enum, default_value = "csv")]
    format: Format,
    #[arg(long, short)]
    out: Option<PathBuf>,
}

#[derive(Args)]
pub struct SimulateArgs {
    /// bern_linear_low, bern_linear_high, pois_linear, pois_nonlinear or gauss_spatial.
    scenario: String,
    #[arg(long, env = "BIVBOOST_SEED", default_value_t = 1)]
    seed: u64,
    #[arg(long, short, default_value = ".")]
    out_dir: PathBuf,
    /// Number of covariates (default: the scenario's).
    #[arg(long)]
    p: Option<usize>,
    #[arg(long)]
    n_train: Option<usize>,
    #[arg(long)]
    n_val: Option<usize>,
    #[arg(long)]
    n_test: Option<usize>,
    /// Region grid for the spatial scenario, as ROWSxCOLS.
    #[arg(long)]
    grid: Option<String>,
}

#[derive(Args)]
pub struct EffectsArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long, short)]
    out_dir: PathBuf,
    /// Grid points for numeric covariates.
    #[arg(long, default_value_t = 100)]
    points: usize,
}

#[derive(Args)]
pub struct FreqsArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long, short)]
    out: Option<PathBuf>,
}

/// One line, no matter how the error chain is nested.
fn error_line(err: &anyhow::Error) -> String {
    let mut parts: Vec<String> = Vec::new();
    for cause in err.chain() {
        let s = cause.to_string();
        if !parts.last().is_some_and(|p| p.ends_with(&s)) {
            parts.push(s);
        }
    }
    parts.join(": ").split_whitespace().collect::<Vec<_>>().join(" ")
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion | ErrorKind::DisplayHelpOnMissingArgumentOrSubcommand) {
                let _ = e.print();
                return if e.kind() == ErrorKind::DisplayHelpOnMissingArgumentOrSubcommand { ExitCode::from(2) } else { ExitCode::SUCCESS };
            }
            let text = e.kind().to_string();
            let detail = e.to_string();
            let first = detail.lines().next().unwrap_or(&text).trim_start_matches("error: ");
            eprintln!("ERROR: {first}");
            return ExitCode::from(2);
        }
    };
    env_logger::Builder::new()
        .filter_level(if cli.verbose { log::LevelFilter::Info } else { log::LevelFilter::Warn })
        .format_target(false)
        .init();
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("ERROR: cannot start {n} threads: {e}");
            return ExitCode::FAILURE;
        }
    }
    let result = match cli.command {
        Command::Fit(a) => commands::fit(a),
        Command::Predict(a) => commands::predict(a),
        Command::Score(a) => commands::score(a),
        Command::Simulate(a) => commands::simulate(a),
        Command::Effects(a) => commands::effects(a),
        Command::Freqs(a) => commands::freqs(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) if is_broken_pipe(&e) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("ERROR: {}", error_line(&e));
            ExitCode::FAILURE
        }
    }
}

/// A reader closing stdout early (`| head`) is not a failure.
fn is_broken_pipe(err: &anyhow::Error) -> bool {
    err.chain().any(|c| {
        c.downcast_ref::<std::io::Error>().is_some_and(|e| e.kind() == std::io::ErrorKind::BrokenPipe)
            || c.downcast_ref::<csv::Error>().is_some_and(|e| matches!(e.kind(), csv::ErrorKind::Io(io) if io.kind() == std::io::ErrorKind::BrokenPipe))
            || c.downcast_ref::<bivboost::Error>().is_some_and(|e| match e {
                bivboost::Error::Io(io) => io.kind() == std::io::ErrorKind::BrokenPipe,
                bivboost::Error::Csv(c) => matches!(c.kind(), csv::ErrorKind::Io(io) if io.kind() == std::io::ErrorKind::BrokenPipe),
                _ => false,
            })
    })
}
