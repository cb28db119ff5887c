use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use rancova::ancova::DEFAULT_SPAN;
use rancova::combine::DEFAULT_TAU;
use rancova_cli::cache::Origin;
use rancova_cli::commands::{sig6, DEFAULT_REPLICATES};
use rancova_cli::{
    cmd_analyze, cmd_calibrate, cmd_simulate, with_threads, AnalyzeOptions, CalibrateOptions, CliError, ColumnMap, Kind,
    Method, Tuning,
};

#[derive(Parser)]
#[command(name = "rancova", version, about = "Robust ANCOVA for two groups and two covariates")]
struct Cli {
    /// Worker threads for calibration and simulation (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Compare two groups from a CSV file.
    Analyze(AnalyzeArgs),
    /// Build the null distribution of a global statistic and cache it.
    Calibrate(CalibrateArgs),
    /// Run a simulation study described by a TOML file.
    Simulate(SimulateArgs),
}

#[derive(Args)]
struct TuningArgs {
    #[arg(long, default_value_t = 0.05)]
    alpha: f64,
    /// Neighborhood radius in robust Mahalanobis distance.
    #[arg(long, default_value_t = DEFAULT_SPAN)]
    span: f64,
    /// Trimming proportion.
    #[arg(long, default_value_t = 0.2)]
    gamma: f64,
    /// Truncation point of the truncated product.
    #[arg(long, default_value_t = DEFAULT_TAU)]
    tau: f64,
    /// Calibration replicates.
    #[arg(long = "B", default_value_t = DEFAULT_REPLICATES)]
    replicates: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long, env = "RANCOVA_CACHE_DIR", default_value = "rancova-cache")]
    cache_dir: PathBuf,
    /// Rebuild calibration tables even when a cached one matches.
    #[arg(long)]
    force: bool,
}

impl TuningArgs {
    fn tuning(&self) -> Tuning {
        Tuning {
            alpha: self.alpha,
            span: self.span,
            gamma: self.gamma,
            tau: self.tau,
            replicates: self.replicates,
            seed: self.seed,
        }
    }
}

#[derive(Args)]
struct AnalyzeArgs {
    /// CSV file with a header row.
    data: PathBuf,
    #[arg(long, short, default_value = "rancova-out")]
    out: PathBuf,
    #[arg(long, value_enum, default_value_t = Method::All)]
    method: Method,
    #[arg(long, default_value = "y")]
    y_col: String,
    #[arg(long, default_value = "x1")]
    x1_col: String,
    #[arg(long, default_value = "x2")]
    x2_col: String,
    #[arg(long, default_value = "group")]
    group_col: String,
    #[command(flatten)]
    tuning: TuningArgs,
}

#[derive(Args)]
struct CalibrateArgs {
    #[arg(long)]
    n1: usize,
    #[arg(long)]
    n2: usize,
    #[arg(long, value_enum, default_value_t = Kind::Both)]
    kind: Kind,
    #[command(flatten)]
    tuning: TuningArgs,
}

#[derive(Args)]
struct SimulateArgs {
    config: PathBuf,
    #[arg(long, short, default_value = "rancova-sim")]
    out: PathBuf,
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Analyze(a) => {
            let opts = AnalyzeOptions {
                data: a.data,
                columns: ColumnMap { y: a.y_col, x1: a.x1_col, x2: a.x2_col, group: a.group_col },
                out_dir: a.out,
                method: a.method,
                tuning: a.tuning.tuning(),
                cache_dir: a.tuning.cache_dir,
                force: a.tuning.force,
            };
            let report = with_threads(cli.threads, || cmd_analyze(&opts))?;
            print!("{}", rancova_cli::commands::summary_text(&report));
        }
        Command::Calibrate(c) => {
            let opts = CalibrateOptions {
                n1: c.n1,
                n2: c.n2,
                kind: c.kind,
                tuning: c.tuning.tuning(),
                cache_dir: c.tuning.cache_dir,
                force: c.tuning.force,
            };
            for o in with_threads(cli.threads, || cmd_calibrate(&opts))? {
                let how = if o.origin == Origin::Cached { "cached" } else { "built" };
                println!("{} critical = {} ({how}) {}", o.combiner.label(), sig6(o.critical), o.path.display());
            }
        }
        Command::Simulate(s) => {
            with_threads(cli.threads, || cmd_simulate(&s.config, &s.out))?;
            let text = std::fs::read_to_string(s.out.join(rancova_cli::commands::STUDY_TEXT))
                .map_err(|e| CliError::io("reading study table", e))?;
            print!("{text}");
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
