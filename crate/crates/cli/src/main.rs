//! `extremal`: evaluate, maximize and certify girth, `λ₁` and the tree number
//! of edge-weighted graphs; generate test families; run brute-force oracles.

mod commands;
mod io;
mod oracle;

use std::process::ExitCode;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use extremal_core::certify::Objective;
use extremal_core::Space;

use crate::io::CliError;

#[derive(Debug, Parser)]
#[command(name = "extremal", version, about, propagate_version = true)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Girth, diameter, λ₁, tree number and effective resistances at a valuation.
    Eval(EvalArgs),
    /// Maximize an objective over a deformation space and certify the result.
    Optimize(OptimizeArgs),
    /// Certificate for a given valuation.
    Certify(CertifyArgs),
    /// Emit a named graph family.
    Generate(GenerateArgs),
    /// Cross-check every derived quantity against brute force.
    Oracle(OracleArgs),
}

#[derive(Debug, Args)]
struct Output {
    /// Write the JSON report here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also write CSV tables with this path prefix.
    #[arg(long)]
    csv: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct EvalArgs {
    /// Graph JSON `{"n", "edges"}` or an edge list `u v [w]` per line.
    graph: PathBuf,
    /// JSON array of edge weights in canonical edge order (default all ones).
    #[arg(long)]
    weights: Option<PathBuf>,
    #[command(flatten)]
    output: Output,
}

#[derive(Debug, Args)]
struct OptimizeArgs {
    graph: PathBuf,
    #[arg(long, value_parser = parse_space)]
    space: Space,
    #[arg(long, value_parser = parse_objective)]
    objective: Objective,
    #[arg(long, default_value_t = 1)]
    starts: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 5000)]
    max_iters: usize,
    #[arg(long, default_value_t = 1e-9)]
    tol: f64,
    #[arg(long, default_value_t = extremal_core::EPS_FLOOR)]
    epsilon_floor: f64,
    /// Starting valuation for the first start.
    #[arg(long)]
    initial: Option<PathBuf>,
    #[command(flatten)]
    output: Output,
}

#[derive(Debug, Args)]
struct CertifyArgs {
    graph: PathBuf,
    #[arg(long)]
    weights: PathBuf,
    #[arg(long, value_parser = parse_space)]
    space: Space,
    #[arg(long, value_parser = parse_objective)]
    objective: Objective,
    #[command(flatten)]
    output: Output,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Family {
    Complete,
    Cycle,
    CompleteBipartite,
    Cube,
    Petersen,
    MoebiusWheel,
    SwitchedCubes,
    SignedRegular,
}

#[derive(Debug, Args)]
struct GenerateArgs {
    #[arg(long, value_enum)]
    family: Family,
    /// Vertex count (complete, cycle).
    #[arg(long)]
    n: Option<usize>,
    /// Part sizes (complete-bipartite).
    #[arg(long)]
    a: Option<usize>,
    #[arg(long)]
    b: Option<usize>,
    /// Cube dimension (cube, switched-cubes).
    #[arg(long)]
    k: Option<usize>,
    /// Number of cubes (switched-cubes).
    #[arg(long)]
    n0: Option<usize>,
    /// Bipartite degree, inner degree and part size (signed-regular).
    #[arg(long)]
    l: Option<usize>,
    #[arg(long)]
    k_in: Option<usize>,
    #[arg(long)]
    n_r: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Also write the bare graph JSON here, ready for the other subcommands.
    #[arg(long)]
    graph_out: Option<PathBuf>,
    #[command(flatten)]
    output: Output,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Table,
    Json,
}

#[derive(Debug, Args)]
struct OracleArgs {
    graph: PathBuf,
    #[arg(long)]
    weights: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Table)]
    format: Format,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn parse_space(s: &str) -> Result<Space, String> {
    s.parse().map_err(|e: extremal_core::Error| e.to_string())
}

fn parse_objective(s: &str) -> Result<Objective, String> {
    s.parse().map_err(|e: extremal_core::Error| e.to_string())
}

fn configure_threads() -> Result<(), String> {
    let Ok(raw) = std::env::var("GE_THREADS") else {
        return Ok(());
    };
    let n: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| format!("GE_THREADS must be a positive integer, got `{raw}`"))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| e.to_string())
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Eval(a) => commands::eval(&a),
        Command::Optimize(a) => commands::optimize(&a),
        Command::Certify(a) => commands::certify(&a),
        Command::Generate(a) => commands::generate(&a),
        Command::Oracle(a) => oracle::run(&a),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => e.exit(),
    };
    if let Err(msg) = configure_threads() {
        eprintln!("error: {msg}");
        return ExitCode::from(2);
    }
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", e.to_json());
            ExitCode::from(e.exit_code())
        }
    }
}
