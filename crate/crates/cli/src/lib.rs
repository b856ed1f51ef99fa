//! Command-line front end: instance generation and solving.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, Context};
use clap::{Args, Parser, Subcommand};
use pbs_lex::colgen::{self, ColgenParams};
use pbs_lex::files::{InstanceFile, SolutionFile};
use pbs_lex::oracle::oracle_pbs;
use pbs_lex::pbs::{generate, GeneratorOptions, Instance};
use serde::Serialize;

#[derive(Debug, Parser)]
#[command(
    name = "pbs-lex",
    version,
    about = "Exact preferential bidding by lexicographic column generation"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write a random instance with a feasible initial partition.
    Generate(GenerateArgs),
    /// Solve an instance to proven optimality.
    Solve(SolveArgs),
    /// Check a solution file against an instance.
    Check(CheckArgs),
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    #[arg(long)]
    pub seed: u64,
    #[arg(long)]
    pub pilots: usize,
    #[arg(long)]
    pub pairings: usize,
    #[arg(long, default_value_t = 30)]
    pub month_days: u32,
    /// Scores are drawn from 0..=max-score.
    #[arg(long, default_value_t = 100)]
    pub max_score: i64,
    /// Output file; stdout when absent.
    #[arg(short, long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SolveArgs {
    pub instance: PathBuf,
    /// Solution file; stdout when absent.
    #[arg(short, long)]
    pub output: Option<PathBuf>,
    /// Write the run statistics here.
    #[arg(long)]
    pub stats_out: Option<PathBuf>,
    /// Columns added per pilot and round [default: 10, or 16 above 80 pilots].
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    pub columns_per_iter: Option<u64>,
    /// Size of the shared candidate list [default: number of pilots].
    #[arg(long = "K", value_parser = clap::value_parser!(u64).range(1..))]
    pub k: Option<u64>,
    /// Margin below which reduced costs count as zero.
    #[arg(long, default_value_t = pbs_lex::DEFAULT_EPS)]
    pub eps: f64,
    /// Price every pilot directly instead of sharing one search.
    #[arg(long)]
    pub no_reduction: bool,
    /// Disable the lower-bound cuts in path searches.
    #[arg(long)]
    pub no_bounds: bool,
    /// Compare the value with exhaustive enumeration (small instances only).
    #[arg(long)]
    pub check_oracle: bool,
    /// Record wall-clock times per phase in the statistics.
    #[arg(long)]
    pub timings: bool,
    /// Give up after this many branch-and-bound nodes per integer solve.
    #[arg(long)]
    pub node_limit: Option<usize>,
}

#[derive(Debug, Args)]
pub struct CheckArgs {
    pub instance: PathBuf,
    pub solution: PathBuf,
}

/// Failure classes with their exit codes.
#[derive(Debug)]
pub enum Failure {
    /// Unreadable, malformed or invalid input: exit code 2.
    Input(anyhow::Error),
    /// The solver or its self-checks failed: exit code 3.
    Solver(anyhow::Error),
}

impl Failure {
    pub fn exit_code(&self) -> i32 {
        match self {
            Failure::Input(_) => 2,
            Failure::Solver(_) => 3,
        }
    }

    pub fn error(&self) -> &anyhow::Error {
        match self {
            Failure::Input(e) | Failure::Solver(e) => e,
        }
    }
}

fn input(e: impl Into<anyhow::Error>) -> Failure {
    Failure::Input(e.into())
}

fn solver(e: impl Into<anyhow::Error>) -> Failure {
    Failure::Solver(e.into())
}

pub fn run(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Generate(a) => run_generate(&a),
        Command::Solve(a) => run_solve(&a).map(|_| ()),
        Command::Check(a) => run_check(&a),
    }
}

pub fn run_generate(a: &GenerateArgs) -> Result<(), Failure> {
    let opts = GeneratorOptions {
        max_score: a.max_score,
        ..GeneratorOptions::default()
    };
    let inst = generate(a.seed, a.pilots, a.pairings, a.month_days, &opts).map_err(input)?;
    write_out(a.output.as_deref(), &InstanceFile::from_instance(&inst).to_json()).map_err(input)
}

pub fn read_instance(path: &Path) -> Result<Instance, Failure> {
    let text = fs::read_to_string(path)
        .with_context(|| format!("cannot read {}", path.display()))
        .map_err(input)?;
    InstanceFile::parse(&text)
        .and_then(|f| f.to_instance())
        .with_context(|| format!("invalid instance {}", path.display()))
        .map_err(input)
}

pub fn run_solve(a: &SolveArgs) -> Result<SolutionFile, Failure> {
    if !(a.eps.is_finite() && a.eps > 0.0) {
        return Err(input(anyhow!("--eps must be a positive number")));
    }
    let inst = read_instance(&a.instance)?;
    let params = ColgenParams {
        columns_per_iter: a.columns_per_iter.map(|v| v as usize),
        k: a.k.map(|v| v as usize),
        eps: a.eps,
        reduction: !a.no_reduction,
        use_bounds: !a.no_bounds,
        audit: false,
        timings: a.timings,
        node_limit: a.node_limit,
    };
    let res = colgen::run(&inst, &params).map_err(solver)?;
    let sol = SolutionFile::from_result(&inst, &res);
    sol.validate(&inst)
        .context("solution failed self-validation")
        .map_err(solver)?;

    if a.check_oracle {
        let best = oracle_pbs(&inst)
            .context("--check-oracle")
            .map_err(input)?
            .ok_or_else(|| solver(anyhow!("oracle found no feasible partition")))?;
        if best.value != sol.value {
            return Err(solver(anyhow!(
                "value {:?} differs from the enumerated optimum {:?}",
                sol.value,
                best.value
            )));
        }
    }

    write_out(a.output.as_deref(), &sol.to_json()).map_err(input)?;
    if let Some(path) = &a.stats_out {
        write_out(Some(path), &to_json(&sol.stats)).map_err(input)?;
    }
    eprintln!(
        "optimal: value {:?}, {} iterations, {} columns",
        sol.value, sol.stats.iterations, sol.stats.pool_size
    );
    Ok(sol)
}

pub fn run_check(a: &CheckArgs) -> Result<(), Failure> {
    let inst = read_instance(&a.instance)?;
    let text = fs::read_to_string(&a.solution)
        .with_context(|| format!("cannot read {}", a.solution.display()))
        .map_err(input)?;
    let sol = SolutionFile::parse(&text)
        .with_context(|| format!("invalid solution {}", a.solution.display()))
        .map_err(input)?;
    sol.validate(&inst).map_err(input)?;
    eprintln!("ok: value {:?}", sol.value);
    Ok(())
}

fn to_json<T: Serialize>(v: &T) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("statistics serialize");
    s.push('\n');
    s
}

fn write_out(path: Option<&Path>, text: &str) -> anyhow::Result<()> {
    match path {
        Some(p) => fs::write(p, text).with_context(|| format!("cannot write {}", p.display())),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}
