//! Inexact variable-metric randomized block-coordinate descent for regularized problems
//! `F(x) = g(Ax) + sum_i psi_i(x_i)`.
//!
//! The numerical core is generic over [`scalar::Scalar`] (`f32` or `f64`); the aliases below
//! fix it to `f64`, which is what the CLI and the acceptance suite use.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod data;
pub mod error;
pub mod experiment;
pub mod linalg;
pub mod problems;
pub mod sampling;
pub mod scalar;
pub mod solvers;
pub mod subproblem;
pub mod theory;

pub use error::{Error, Result};

pub type Dataset = data::Dataset<f64>;
pub type BlockedSparseMatrix = data::BlockedSparseMatrix<f64>;
pub type CompositeProblem = problems::CompositeProblem<f64>;
pub type SolverState = problems::SolverState<f64>;
pub type SeparableRegularizer = problems::SeparableRegularizer<f64>;
pub type RunConfig = solvers::RunConfig<f64>;
pub type RunOutput = solvers::RunOutput<f64>;
pub type SynthSpec = data::SynthSpec<f64>;
