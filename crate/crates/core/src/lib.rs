//! Two-stage solver for composite problems `F = f + Psi` with an l1 regularizer.
//!
//! The first stage is an inexact successive quadratic approximation (proximal
//! quasi-Newton or proximal Newton) whose inner solvers provably identify the
//! active manifold. Once the support pattern has stayed fixed for `S` outer
//! iterations the solver switches to a truncated semismooth Newton method on
//! that manifold, interleaved with proximal-gradient safeguard steps.
//!
//! The crate is organized bottom-up:
//!
//! * [`problem`]: sparse design matrices, LIBSVM ingestion, the smooth-loss
//!   trait and its logistic and synthetic realizations.
//! * [`regularizer`]: the l1 norm (value, proximal maps, residuals, support).
//! * [`hessian_ops`]: L-BFGS, damped Newton, scaled identity and enlargement.
//! * [`quadratic_model`]: the subproblem and its stopping tests.
//! * [`subsolvers`]: PG, APG, RPCD and SpaRSA.
//! * [`manifold_newton`]: chart, reduced derivatives, PCG, the TSSN step.
//! * [`outer_loop`]: ISQA and ISQA+ drivers with telemetry.
//! * [`verify`]: synthetic instances with known solutions and rate audits.

// `!(a > b)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod hessian_ops;
pub mod linalg;
pub mod manifold_newton;
pub mod outer_loop;
pub mod parallel;
pub mod problem;
pub mod quadratic_model;
pub mod regularizer;
pub mod subsolvers;
pub mod verify;

pub use error::{Error, Result};
pub use outer_loop::{run, run_streaming, TraceRecord, Algorithm, HessianKind, OuterConfig, SolveReport, Termination};
pub use problem::{CompositeProblem, LogisticLoss, SmoothFunction, SparseDesignMatrix};
pub use regularizer::{L1Regularizer, Regularizer, SupportPattern};
pub use subsolvers::SubsolverKind;
