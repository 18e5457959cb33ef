//! `pbhfsp`: generate instances, solve them, check schedules, score fronts
//! and run variant comparisons.

mod commands;
mod fronts;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use pbhfsp_core::moead::{SolverParams, Variant};

#[derive(Parser, Debug)]
#[command(name = "pbhfsp", version, about = "Bi-objective scheduling of hybrid flow shops with batching stages")]
struct Cli {
    /// Log every evaluated neighborhood move (kind, target, objective deltas, accepted).
    #[arg(long, global = true)]
    trace: bool,
    /// More log output (-v info, -vv debug).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Write instance files: the 45-instance benchmark grid or one custom instance.
    Gen(GenArgs),
    /// Solve one instance and write the run report and front.
    Solve(SolveArgs),
    /// Validate a schedule file against an instance.
    Check(CheckArgs),
    /// Score front CSV files (HV, IGD, Spread) against their union.
    Metrics(MetricsArgs),
    /// Run variants x instances x seeds and tabulate mean ranks.
    Compare(CompareArgs),
}

#[derive(Args, Debug)]
struct GenArgs {
    /// Output directory.
    #[arg(long)]
    out: PathBuf,
    /// Base seed.
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Write the benchmark grid instead of a single instance.
    #[arg(long, conflicts_with_all = ["jobs", "stages", "machines"])]
    suite: bool,
    #[arg(long, default_value_t = 20)]
    jobs: usize,
    #[arg(long, default_value_t = 3)]
    stages: usize,
    /// Upper bound on machines per stage.
    #[arg(long, default_value_t = 3)]
    machines: usize,
    /// Probability that a stage is a batching stage.
    #[arg(long, default_value_t = 0.5)]
    batch_prob: f64,
}

/// Solver settings shared by `solve` and `compare`.
#[derive(Args, Debug, Clone)]
struct SolverArgs {
    /// Stop after this many schedule evaluations (deterministic).
    #[arg(long)]
    budget_evals: Option<u64>,
    /// Stop after this wall-clock time.
    #[arg(long)]
    runtime_ms: Option<u64>,
    #[arg(long, default_value = "AMOEAD")]
    variant: Variant,
    #[arg(long, default_value_t = 40)]
    popsize: usize,
    /// Same-side updates before a weight vector rotates (L).
    #[arg(long, default_value_t = 2)]
    tabu_l: usize,
    /// Neighborhood size (T).
    #[arg(long, default_value_t = 5)]
    neighbors_t: usize,
    /// Q-learning rate.
    #[arg(long, default_value_t = 0.1)]
    alpha: f64,
    /// Q-learning discount.
    #[arg(long, default_value_t = 0.9)]
    gamma: f64,
}

impl SolverArgs {
    fn params(&self) -> SolverParams {
        let defaults = SolverParams::default();
        let budget_evals = match (self.budget_evals, self.runtime_ms) {
            (None, None) => defaults.budget_evals,
            (b, _) => b,
        };
        SolverParams {
            popsize: self.popsize,
            rotation_l: self.tabu_l,
            neighbors_t: self.neighbors_t,
            alpha: self.alpha,
            gamma: self.gamma,
            budget_evals,
            runtime_ms: self.runtime_ms,
            variant: self.variant,
            ..defaults
        }
    }
}

#[derive(Args, Debug)]
struct SolveArgs {
    #[arg(long)]
    instance: PathBuf,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Output directory for report.json, front.csv and schedule files.
    #[arg(long)]
    out: PathBuf,
    #[command(flatten)]
    solver: SolverArgs,
}

#[derive(Args, Debug)]
struct CheckArgs {
    #[arg(long)]
    instance: PathBuf,
    #[arg(long)]
    schedule: PathBuf,
    /// Also write the per-operation timing table here.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct MetricsArgs {
    /// Front CSV files (`makespan,tec`).
    #[arg(required = true, num_args = 1..)]
    fronts: Vec<PathBuf>,
    /// Write the metrics CSV here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct CompareArgs {
    /// Instance files; may be repeated.
    #[arg(long, required = true, num_args = 1..)]
    instance: Vec<PathBuf>,
    /// Variants to run.
    #[arg(long = "variants", num_args = 1.., default_values = ["AMOEAD", "AMOEAD1", "AMOEAD2", "AMOEAD3"])]
    variants: Vec<Variant>,
    /// First seed; runs use seed, seed+1, ...
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Runs per (instance, variant).
    #[arg(long, default_value_t = 10)]
    runs: u64,
    /// Parallel solver runs.
    #[arg(long, default_value_t = 1)]
    workers: usize,
    #[arg(long)]
    out: PathBuf,
    #[command(flatten)]
    solver: SolverArgs,
}

fn init_logging(cli: &Cli) {
    let level = match (cli.trace, cli.verbose) {
        (true, _) => "pbhfsp_core=trace",
        (false, 0) => "warn",
        (false, 1) => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level))
        .format_timestamp(None)
        .init();
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    init_logging(&cli);
    let result = match &cli.command {
        Command::Gen(a) => commands::gen(a),
        Command::Solve(a) => commands::solve(a),
        Command::Check(a) => commands::check(a),
        Command::Metrics(a) => commands::metrics(a),
        Command::Compare(a) => commands::compare(a),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
