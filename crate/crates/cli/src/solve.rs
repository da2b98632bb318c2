//! The `solve` subcommand: run manifest, CSV trace and JSON report.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::{SystemTime, UNIX_EPOCH};

use clap::Args;
use serde::{Deserialize, Serialize};

use isqa::outer_loop::run_streaming;
use isqa::parallel::Parallelism;
use isqa::problem::{CompositeProblem, SmoothFunction};
use isqa::{Algorithm, HessianKind, OuterConfig, SubsolverKind, SupportPattern, Termination, TraceRecord};

use crate::data::{self, DataArgs, DatasetInfo, Problem};
use crate::{write_json, CliError};

pub const TRACE_HEADER: [&str; 10] = [
    "iter",
    "seconds",
    "objective",
    "rel_gap",
    "nnz",
    "stage",
    "alpha",
    "prox_grad_norm",
    "inner_iters",
    "enlargements",
];

#[derive(Debug, Args)]
pub struct SolveArgs {
    #[command(flatten)]
    pub data: DataArgs,
    /// isqa or isqa+, optionally with the Hessian: isqa+-newton, isqa-lbfgs.
    #[arg(long, default_value = "isqa+-lbfgs")]
    pub algo: String,
    /// pg, apg, rpcd or sparsa.
    #[arg(long, default_value = "rpcd")]
    pub subsolver: String,
    /// Unchanged-support iterations before the second stage.
    #[arg(long = "S", default_value_t = 10)]
    pub s: usize,
    /// Inner iterations per subproblem.
    #[arg(long = "T", default_value_t = 5)]
    pub t: usize,
    #[arg(long, default_value_t = 1e-8)]
    pub tol: f64,
    #[arg(long = "max-iter", default_value_t = 10_000)]
    pub max_iter: usize,
    #[arg(long = "max-seconds")]
    pub max_seconds: Option<f64>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Optimal value, or a file with a number or a `reference` output.
    #[arg(long, value_name = "VALUE|FILE")]
    pub fstar: Option<String>,
    /// CSV trace output.
    #[arg(long, value_name = "PATH")]
    pub trace: Option<PathBuf>,
    /// JSON report output.
    #[arg(long, value_name = "PATH")]
    pub report: Option<PathBuf>,
    /// Sequential kernels and a zero `seconds` column: byte-identical traces.
    #[arg(long)]
    pub deterministic: bool,
    /// Rerun from the manifest of an earlier JSON report (ignores problem flags).
    #[arg(long, value_name = "REPORT", conflicts_with_all = ["data", "builtin"])]
    pub replay: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub version: String,
    pub started_unix: u64,
    pub seed: u64,
    pub deterministic: bool,
    pub dataset: DatasetInfo,
    pub lambda: f64,
    pub fstar: Option<f64>,
    pub config: OuterConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveOutput {
    pub manifest: RunManifest,
    pub termination: Termination,
    pub iterations: usize,
    pub objective: f64,
    pub rel_gap: Option<f64>,
    pub prox_grad_norm: f64,
    pub nnz: usize,
    pub zero_set: Vec<usize>,
    pub x: Vec<f64>,
    pub elapsed_seconds: f64,
}

fn parse_algo(s: &str) -> Result<(Algorithm, HessianKind), CliError> {
    let (a, h) = s.split_once('-').unwrap_or((s, "lbfgs"));
    let algorithm = a.parse::<Algorithm>()?;
    let hessian = h.parse::<HessianKind>()?;
    Ok((algorithm, hessian))
}

fn config_from(args: &SolveArgs) -> Result<OuterConfig, CliError> {
    let (algorithm, hessian) = parse_algo(&args.algo)?;
    let subsolver = args.subsolver.parse::<SubsolverKind>()?;
    let cfg = OuterConfig {
        algorithm,
        hessian,
        subsolver,
        inner_iterations: args.t,
        inner_max_iterations: args.t,
        unchanged_threshold: args.s,
        tol: args.tol,
        max_outer: args.max_iter,
        max_seconds: args.max_seconds.unwrap_or(f64::INFINITY),
        seed: args.seed,
        ..OuterConfig::default()
    };
    cfg.validate()?;
    Ok(cfg)
}

fn now_unix() -> u64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs())
}

fn load_replay(path: &PathBuf) -> Result<RunManifest, CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    let out: SolveOutput =
        serde_json::from_str(&text).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
    Ok(out.manifest)
}

pub fn cmd_solve(args: &SolveArgs) -> Result<ExitCode, CliError> {
    let (data_args, config, fstar_arg, deterministic, seed) = match &args.replay {
        Some(path) => {
            let m = load_replay(path)?;
            let data_args = DataArgs {
                data: m.dataset.path.clone(),
                builtin: m.dataset.builtin.clone(),
                lambda: Some(m.lambda),
                features: Some(m.dataset.features),
                rows: m.dataset.rows,
            };
            (data_args, m.config, m.fstar.map(Fstar::Value), m.deterministic, m.seed)
        }
        None => (
            args.data.clone(),
            config_from(args)?,
            args.fstar.clone().map(Fstar::Arg),
            args.deterministic,
            args.seed,
        ),
    };
    let parallelism = if deterministic { Parallelism::Sequential } else { Parallelism::from_env() };
    let loaded = data::load(&data_args, parallelism)?;
    if let Some(path) = &args.replay {
        let want = load_replay(path)?.dataset.sha256;
        if want != loaded.info.sha256 {
            return Err(CliError::Data("dataset checksum differs from the manifest".into()));
        }
    }
    let fstar = match fstar_arg {
        Some(Fstar::Value(v)) => Some(v),
        Some(Fstar::Arg(s)) => Some(data::parse_fstar(&s)?),
        None => loaded.fstar,
    };
    let manifest = RunManifest {
        version: env!("CARGO_PKG_VERSION").to_string(),
        started_unix: now_unix(),
        seed,
        deterministic,
        dataset: loaded.info.clone(),
        lambda: loaded.lambda,
        fstar,
        config,
    };
    let mut trace = match &args.trace {
        Some(path) => Some(TraceWriter::create(path, deterministic)?),
        None => None,
    };
    let output = match &loaded.problem {
        Problem::Logistic(p) => solve_one(p, &manifest, trace.as_mut())?,
        Problem::Synthetic(p) => solve_one(p, &manifest, trace.as_mut())?,
    };
    if let Some(t) = trace {
        t.finish()?;
    }
    print_summary(&output);
    if let Some(path) = &args.report {
        write_json(path, &output)?;
    }
    Ok(ExitCode::SUCCESS)
}

enum Fstar {
    Value(f64),
    Arg(String),
}

fn solve_one<F: SmoothFunction>(
    problem: &CompositeProblem<F>,
    manifest: &RunManifest,
    mut trace: Option<&mut TraceWriter>,
) -> Result<SolveOutput, CliError> {
    let x0 = vec![0.0; problem.dim()];
    let mut write_error = None;
    let report = run_streaming(problem, &x0, &manifest.config, manifest.fstar, &mut |r| {
        if let Some(t) = trace.as_deref_mut() {
            if write_error.is_none() {
                write_error = t.row(r).err();
            }
        }
    })?;
    if let Some(e) = write_error {
        return Err(e);
    }
    let last = report.trace.last();
    let pattern = SupportPattern::of(&report.x);
    Ok(SolveOutput {
        manifest: manifest.clone(),
        termination: report.termination,
        iterations: report.iterations,
        objective: report.objective,
        rel_gap: last.and_then(|r| r.rel_gap),
        prox_grad_norm: last.map_or(f64::NAN, |r| r.prox_grad_norm),
        nnz: pattern.nnz(),
        zero_set: pattern.zero_set().to_vec(),
        x: report.x,
        elapsed_seconds: if manifest.deterministic { 0.0 } else { report.elapsed_seconds },
    })
}

fn print_summary(out: &SolveOutput) {
    println!("termination: {:?}", out.termination);
    println!("iterations: {}", out.iterations);
    println!("objective: {}", out.objective);
    if let Some(g) = out.rel_gap {
        println!("rel_gap: {g:e}");
    }
    println!("nnz: {} of {}", out.nnz, out.x.len());
    if out.x.len() <= 20 {
        let xs: Vec<String> = out.x.iter().map(|v| v.to_string()).collect();
        println!("x: [{}]", xs.join(", "));
    }
}

/// Writes one CSV row per trace record and flushes it.
pub struct TraceWriter {
    csv: csv::Writer<BufWriter<File>>,
    deterministic: bool,
}

impl TraceWriter {
    fn create(path: &PathBuf, deterministic: bool) -> Result<Self, CliError> {
        let file = File::create(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        let mut csv = csv::Writer::from_writer(BufWriter::new(file));
        csv.write_record(TRACE_HEADER).map_err(io_err)?;
        Ok(Self { csv, deterministic })
    }

    fn row(&mut self, r: &TraceRecord) -> Result<(), CliError> {
        let seconds = if self.deterministic { 0.0 } else { r.wall_seconds };
        self.csv
            .write_record([
                r.iteration.to_string(),
                format!("{seconds:.6}"),
                r.objective.to_string(),
                r.rel_gap.map_or_else(|| "na".to_string(), |g| g.to_string()),
                r.nnz.to_string(),
                r.step.tag().to_string(),
                r.alpha.to_string(),
                r.prox_grad_norm.to_string(),
                r.inner_iters.to_string(),
                r.enlargements.to_string(),
            ])
            .map_err(io_err)?;
        self.csv.flush().map_err(|e| CliError::Io(e.to_string()))
    }

    fn finish(mut self) -> Result<(), CliError> {
        self.csv.flush().map_err(|e| CliError::Io(e.to_string()))?;
        let mut inner = self.csv.into_inner().map_err(|e| CliError::Io(e.to_string()))?;
        inner.flush().map_err(|e| CliError::Io(e.to_string()))
    }
}

fn io_err(e: csv::Error) -> CliError {
    CliError::Io(e.to_string())
}
