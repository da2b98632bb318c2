//! Problem sources: LIBSVM files and built-in instances.

use std::fs;
use std::path::{Path, PathBuf};

use clap::Args;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use isqa::problem::{parse_libsvm, CompositeProblem, LogisticLoss, QuadraticQuartic};
use isqa::verify::example_one;
use isqa::parallel::Parallelism;
use isqa::L1Regularizer;

use crate::CliError;

#[derive(Debug, Clone, Args)]
pub struct DataArgs {
    /// LIBSVM file with +1/-1 labels (this or --builtin is required).
    #[arg(long, value_name = "PATH", conflicts_with = "builtin")]
    pub data: Option<PathBuf>,
    /// Built-in instance (example1).
    #[arg(long, value_name = "NAME")]
    pub builtin: Option<String>,
    /// l1 weight [default: 1, or the instance's own for builtins]
    #[arg(long)]
    pub lambda: Option<f64>,
    /// Feature count (must cover the largest index in the file).
    #[arg(long, value_name = "N")]
    pub features: Option<usize>,
    /// Use only the first N rows of the file.
    #[arg(long, value_name = "N")]
    pub rows: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetInfo {
    pub path: Option<PathBuf>,
    pub sha256: Option<String>,
    pub builtin: Option<String>,
    pub rows: Option<usize>,
    pub features: usize,
}

pub enum Problem {
    Logistic(CompositeProblem<LogisticLoss>),
    Synthetic(CompositeProblem<QuadraticQuartic>),
}

pub struct Loaded {
    pub problem: Problem,
    pub info: DatasetInfo,
    pub lambda: f64,
    /// Known optimal value, for built-in instances with their own lambda.
    pub fstar: Option<f64>,
}

impl Loaded {
    pub fn dim(&self) -> usize {
        match &self.problem {
            Problem::Logistic(p) => p.dim(),
            Problem::Synthetic(p) => p.dim(),
        }
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

fn regularizer(lambda: f64) -> Result<L1Regularizer, CliError> {
    L1Regularizer::new(lambda).map_err(|e| CliError::Config(format!("--lambda: {e}")))
}

pub fn load(args: &DataArgs, parallelism: Parallelism) -> Result<Loaded, CliError> {
    if let Some(name) = &args.builtin {
        return builtin(name, args.lambda);
    }
    let path = args.data.as_ref().ok_or_else(|| CliError::Config("--data or --builtin is required".into()))?;
    load_file(path, args, parallelism)
}

fn builtin(name: &str, lambda: Option<f64>) -> Result<Loaded, CliError> {
    match name {
        "example1" => {
            let inst = example_one();
            let own = inst.problem.reg.lambda();
            let lambda = lambda.unwrap_or(own);
            let fstar = (lambda == own).then_some(inst.fstar);
            Ok(Loaded {
                problem: Problem::Synthetic(CompositeProblem::new(inst.problem.smooth.clone(), regularizer(lambda)?)),
                info: DatasetInfo {
                    path: None,
                    sha256: None,
                    builtin: Some(name.to_string()),
                    rows: None,
                    features: 2,
                },
                lambda,
                fstar,
            })
        }
        _ => Err(CliError::Config(format!("unknown builtin {name:?} (example1)"))),
    }
}

fn load_file(path: &Path, args: &DataArgs, parallelism: Parallelism) -> Result<Loaded, CliError> {
    let bytes = fs::read(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    let (mut matrix, mut labels) =
        parse_libsvm(bytes.as_slice(), args.features).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
    if let Some(n) = args.rows {
        let n = n.min(matrix.n_rows());
        matrix = matrix.head_rows(n);
        labels.truncate(n);
    }
    if matrix.n_rows() == 0 || matrix.n_cols() == 0 {
        return Err(CliError::Data(format!("{}: empty dataset", path.display())));
    }
    let features = matrix.n_cols();
    let loss = LogisticLoss::new(matrix.with_parallelism(parallelism), labels).map_err(|e| CliError::Data(e.to_string()))?;
    let lambda = args.lambda.unwrap_or(1.0);
    Ok(Loaded {
        problem: Problem::Logistic(CompositeProblem::new(loss, regularizer(lambda)?)),
        info: DatasetInfo {
            path: Some(path.to_path_buf()),
            sha256: Some(sha256_hex(&bytes)),
            builtin: None,
            rows: args.rows,
            features,
        },
        lambda,
        fstar: None,
    })
}

/// `--fstar`: a number, or a file holding a number or a reference report.
pub fn parse_fstar(arg: &str) -> Result<f64, CliError> {
    if let Ok(v) = arg.trim().parse::<f64>() {
        return Ok(v);
    }
    let text = fs::read_to_string(arg).map_err(|e| CliError::Io(format!("--fstar {arg}: {e}")))?;
    if let Ok(v) = text.trim().parse::<f64>() {
        return Ok(v);
    }
    let json: serde_json::Value =
        serde_json::from_str(&text).map_err(|e| CliError::Data(format!("--fstar {arg}: {e}")))?;
    json.get("value")
        .and_then(|v| v.as_f64())
        .ok_or_else(|| CliError::Data(format!("--fstar {arg}: no numeric \"value\" field")))
}
