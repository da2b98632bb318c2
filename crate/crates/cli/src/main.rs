//! `isqa`: solve l1-regularized logistic regression, compute reference
//! values, and run the verification suites.

mod data;
mod solve;

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use isqa::parallel::Parallelism;
use isqa::problem::to_libsvm;
use isqa::verify::{a9a_like, reference_solve, run_suite, summarize, RateVerdict, Suite, SuiteOptions};

use data::{DataArgs, Problem};

#[derive(Debug)]
pub enum CliError {
    /// Bad flags or configuration; exit code 2.
    Config(String),
    Io(String),
    Data(String),
    Solver(String),
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "configuration: {m}"),
            CliError::Io(m) => write!(f, "io: {m}"),
            CliError::Data(m) => write!(f, "data: {m}"),
            CliError::Solver(m) => write!(f, "solver: {m}"),
        }
    }
}

impl From<isqa::Error> for CliError {
    fn from(e: isqa::Error) -> Self {
        match e {
            isqa::Error::InvalidArgument(m) => CliError::Config(m),
            other => CliError::Solver(other.to_string()),
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "isqa", version, about = "Two-stage solver for l1-regularized problems")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Solve one problem; optional CSV trace and JSON report.
    Solve(solve::SolveArgs),
    /// High-accuracy objective value for --fstar.
    Reference(ReferenceArgs),
    /// Run verification suites; exit 0 iff every verdict passes.
    Verify(VerifyArgs),
    /// Write a synthetic a9a-like dataset in LIBSVM format.
    Synth(SynthArgs),
}

#[derive(Debug, Args)]
struct ReferenceArgs {
    #[command(flatten)]
    data: DataArgs,
    #[arg(long = "max-iter", default_value_t = 10_000)]
    max_iter: usize,
    /// Output JSON file {value, residual, iterations, termination}.
    #[arg(long, value_name = "PATH")]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct VerifyArgs {
    /// Suite to run (repeatable; default all).
    #[arg(long = "suite", value_name = "NAME", value_parser = parse_suite)]
    suites: Vec<Suite>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Restrict instance-based suites to a built-in instance (example1).
    #[arg(long, value_name = "NAME", value_parser = ["example1"])]
    builtin: Option<String>,
    /// Override the number of random instances.
    #[arg(long, value_name = "N")]
    instances: Option<usize>,
    /// JSON verdict dump.
    #[arg(long, value_name = "PATH")]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct SynthArgs {
    #[arg(long, default_value_t = 2000)]
    rows: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, value_name = "PATH")]
    out: PathBuf,
}

fn parse_suite(s: &str) -> Result<Suite, String> {
    s.parse::<Suite>().map_err(|_| {
        let names: Vec<&str> = Suite::ALL.iter().map(|s| s.name()).collect();
        format!("unknown suite (expected one of: {})", names.join(", "))
    })
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let text = serde_json::to_string_pretty(value).map_err(|e| CliError::Io(e.to_string()))?;
    fs::write(path, text + "\n").map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

#[derive(Serialize)]
struct ReferenceFile {
    value: f64,
    residual: f64,
    iterations: usize,
    termination: isqa::Termination,
}

fn cmd_reference(args: &ReferenceArgs) -> Result<ExitCode, CliError> {
    let loaded = data::load(&args.data, Parallelism::from_env())?;
    let x0 = vec![0.0; loaded.dim()];
    let r = match &loaded.problem {
        Problem::Logistic(p) => reference_solve(p, &x0, args.max_iter)?,
        Problem::Synthetic(p) => reference_solve(p, &x0, args.max_iter)?,
    };
    println!("value: {}", r.value);
    println!("residual: {:e}", r.residual);
    println!("iterations: {}", r.iterations);
    println!("termination: {:?}", r.termination);
    if let Some(path) = &args.out {
        write_json(
            path,
            &ReferenceFile {
                value: r.value,
                residual: r.residual,
                iterations: r.iterations,
                termination: r.termination,
            },
        )?;
    }
    Ok(ExitCode::SUCCESS)
}

#[derive(Serialize)]
struct SuiteReport {
    suite: Suite,
    total: usize,
    passed: usize,
    verdicts: Vec<RateVerdict>,
}

#[derive(Serialize)]
struct VerifyReport {
    seed: u64,
    pass: bool,
    suites: Vec<SuiteReport>,
}

fn cmd_verify(args: &VerifyArgs) -> Result<ExitCode, CliError> {
    let opts = SuiteOptions {
        seed: args.seed,
        instances: args.instances,
        example_one: args.builtin.is_some(),
    };
    let suites = if args.suites.is_empty() { Suite::ALL.to_vec() } else { args.suites.clone() };
    let mut reports = Vec::new();
    for suite in suites {
        let verdicts = run_suite(suite, &opts)?;
        let passed = verdicts.iter().filter(|v| v.pass).count();
        for (claim, n, ok) in summarize(&verdicts) {
            println!("{suite}: {claim} {ok}/{n}");
        }
        for v in verdicts.iter().filter(|v| !v.pass) {
            println!("  FAIL {} {}: measured {:e}, bound {:e}", v.claim, v.instance, v.measured, v.bound);
        }
        reports.push(SuiteReport {
            suite,
            total: verdicts.len(),
            passed,
            verdicts,
        });
    }
    let pass = reports.iter().all(|r| r.total > 0 && r.passed == r.total);
    println!("{}", if pass { "all verdicts pass" } else { "some verdicts fail" });
    if let Some(path) = &args.out {
        write_json(
            path,
            &VerifyReport {
                seed: args.seed,
                pass,
                suites: reports,
            },
        )?;
    }
    Ok(if pass { ExitCode::SUCCESS } else { ExitCode::FAILURE })
}

fn cmd_synth(args: &SynthArgs) -> Result<ExitCode, CliError> {
    let (a, y) = a9a_like(args.rows, args.seed);
    fs::write(&args.out, to_libsvm(&a, &y)).map_err(|e| CliError::Io(format!("{}: {e}", args.out.display())))?;
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Solve(args) => solve::cmd_solve(args),
        Command::Reference(args) => cmd_reference(args),
        Command::Verify(args) => cmd_verify(args),
        Command::Synth(args) => cmd_synth(args),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if matches!(e, CliError::Config(_)) { 2 } else { 1 })
        }
    }
}
