//! Stationarity diagnostics and evaluators for the convergence-rate bounds.

mod bounds;

pub use bounds::{
    complexity_ossc, early_linear, linear_growth_factor, linear_growth_rho, linear_ossc_factor,
    linear_ossc_rho, nonconvex_g_bound, nonconvex_q_bound, rcd_g_bound, short_step_ossc_factor,
    step_multiplier, sublinear_bound, EarlyLinear, TheoryParams,
};

use crate::error::{invalid, Result};
use crate::problems::{CompositeProblem, SolverState};
use crate::scalar::{norm, norm_sq, Scalar};

/// Per-epoch diagnostics of one run.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceRecord {
    pub epoch: usize,
    pub objective: f64,
    /// `(F - F*) / |F*|`, filled in once `F*` is known.
    pub rel_gap: Option<f64>,
    /// `||G||^2` at the epoch's iterate.
    pub g_norm_sq: f64,
    /// Mean accepted step over the epoch's iterations (0 at epoch 0).
    pub mean_alpha: f64,
    /// Fraction of coordinates that are exactly zero.
    pub sparsity: f64,
    /// Cumulative iterations weighted by `nnz(A_i) / nnz(A)`.
    pub weighted_epoch: f64,
    pub wall_ms: f64,
    pub line_search_trials: usize,
    /// Hash of the nonzero pattern of `x`.
    pub support_fingerprint: u64,
}

/// Relative gap `(F - F*) / |F*|` (plain difference when `F* = 0`).
pub fn relative_gap(f: f64, f_star: f64) -> f64 {
    let scale = if f_star == 0.0 { 1.0 } else { f_star.abs() };
    (f - f_star) / scale
}

/// Fills `rel_gap` for every record.
pub fn fill_rel_gap(trace: &mut [TraceRecord], f_star: f64) {
    for r in trace {
        r.rel_gap = Some(relative_gap(r.objective, f_star));
    }
}

/// `G = prox_psi(x - grad f(x)) - x`, the identity-metric proximal-gradient step.
pub fn stationarity_g<T: Scalar>(problem: &CompositeProblem<T>, state: &SolverState<T>) -> Vec<T> {
    let grad = problem.full_gradient(state);
    let x = state.x();
    let mut out: Vec<T> = x.iter().zip(&grad).map(|(&a, &g)| a - g).collect();
    let p = problem.partition();
    for i in 0..p.num_blocks() {
        problem.reg().prox_block(i, &mut out[p.range(i)], T::one());
    }
    out.iter_mut().zip(x).for_each(|(o, &a)| *o -= a);
    out
}

pub fn stationarity_norm_sq<T: Scalar>(problem: &CompositeProblem<T>, state: &SolverState<T>) -> T {
    norm_sq(&stationarity_g(problem, state))
}

/// Radius estimates for the initial level set.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct R0Estimate {
    /// Largest distance of a recorded iterate to the reference solution.
    pub lower: f64,
    /// `sqrt(2 (F(x0) - F*) / mu)`, when `mu` is known.
    pub upper: Option<f64>,
}

impl R0Estimate {
    /// The value used by bound evaluators: the upper proxy when available.
    pub fn value(&self) -> f64 {
        self.upper.unwrap_or(self.lower)
    }
}

pub fn estimate_r0<T: Scalar>(
    problem: &CompositeProblem<T>,
    iterates: &[Vec<T>],
    reference: Option<&[T]>,
    mu: Option<f64>,
) -> Result<R0Estimate> {
    let x_star = reference.ok_or_else(|| invalid("R0 estimate needs a reference solution"))?;
    let first = iterates
        .first()
        .ok_or_else(|| invalid("R0 estimate needs at least the initial point"))?;
    let lower = iterates
        .iter()
        .map(|x| {
            let diff: Vec<T> = x.iter().zip(x_star).map(|(&a, &b)| a - b).collect();
            norm(&diff).to_f64_lossy()
        })
        .fold(0.0, f64::max);
    let upper = match mu {
        Some(mu) if mu > 0.0 => {
            let gap = (problem.objective_at(first)? - problem.objective_at(x_star)?)
                .to_f64_lossy()
                .max(0.0);
            Some((2.0 * gap / mu).sqrt())
        }
        _ => None,
    };
    Ok(R0Estimate { lower, upper })
}
