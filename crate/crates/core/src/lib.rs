//! Stochastic subspace cubic Newton for smooth non-convex problems.
//!
//! The library covers LIBSVM data loading, the regularized logistic objective
//! and synthetic test functions, coordinate subset sampling schedules, the
//! cubic model and its exact global minimizer, the optimizer itself, baseline
//! methods and the benchmark harness behind the `sscn` binary.

// `!(x > 0.0)` is the NaN-rejecting parameter check used throughout.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod baselines;
pub mod bench;
pub mod data_io;
pub mod error;
pub mod model;
pub mod objectives;
pub mod optimizer;
pub mod subproblem;
pub mod subset;

pub use error::{Result, SscnError};
