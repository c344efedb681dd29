//! Outer loops: variable-metric BCD with line search, unit- and short-step randomized BCD, and
//! an accelerated proximal-gradient baseline.

mod bcd;
mod fista;
mod line_search;

pub use bcd::{block_metric, rcd_short_run, rcd_unit_run, vm_bcd_run};
pub use fista::fista_run;
pub use line_search::{line_search, step_lower_bound, LineSearchOutcome, LineSearchParams};

use std::hash::{DefaultHasher, Hash, Hasher};

use crate::error::{invalid, Error, Result};
use crate::problems::{CompositeProblem, SolverState};
use crate::sampling::{BlockDistribution, SamplerKind};
use crate::scalar::Scalar;
use crate::theory::TraceRecord;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Algorithm {
    VmBcd,
    RcdUnit,
    RcdShort,
    Fista,
}

impl Algorithm {
    pub fn name(self) -> &'static str {
        match self {
            Algorithm::VmBcd => "vm-bcd",
            Algorithm::RcdUnit => "rcd-unit",
            Algorithm::RcdShort => "rcd-short",
            Algorithm::Fista => "fista",
        }
    }
}

impl std::str::FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "vm-bcd" | "vm" => Ok(Algorithm::VmBcd),
            "rcd-unit" => Ok(Algorithm::RcdUnit),
            "rcd-short" => Ok(Algorithm::RcdShort),
            "fista" => Ok(Algorithm::Fista),
            _ => Err(Error::Config(format!("unknown algorithm '{s}'"))),
        }
    }
}

/// Choice of `H_i` for the variable-metric method.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MetricPolicy {
    /// Clamped-curvature Hessian block, floored at `1e-10`.
    HessianBlock,
    /// `kappa A_i^T A_i + 1e-10 I`, fixed over the run.
    FixedGlobalBound,
    /// `L_i I`
    ScaledLipschitz,
    /// `L_min I`
    ScaledLmin,
}

impl std::str::FromStr for MetricPolicy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "hessian" => Ok(MetricPolicy::HessianBlock),
            "fixed" => Ok(MetricPolicy::FixedGlobalBound),
            "lipschitz" => Ok(MetricPolicy::ScaledLipschitz),
            "lmin" => Ok(MetricPolicy::ScaledLmin),
            _ => Err(Error::Config(format!("unknown metric '{s}'"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig<T> {
    pub algorithm: Algorithm,
    pub metric: MetricPolicy,
    pub sampler: SamplerKind,
    /// Inner SpaRSA iterations per subproblem.
    pub inner_budget: usize,
    pub line_search: LineSearchParams<T>,
    pub epochs: usize,
    pub seed: u64,
    pub f_star: Option<T>,
    /// Starting point; zero when absent.
    pub x0: Option<Vec<T>>,
    /// Recompute `z = Ax` and `F` every this many epochs.
    pub refresh_every: usize,
    pub record_steps: bool,
    /// Certify `eta` for every recorded step with this reference budget.
    pub certify_budget: Option<usize>,
    /// Log `||G_k||^2` before every iteration.
    pub g_every_iteration: bool,
    /// Stop at the end of an epoch once `||G||^2` falls to this level.
    pub stop_g_norm_sq: Option<T>,
    /// Stop once the relative gap (needs `f_star`) is at or below this value.
    pub stop_rel_gap: Option<f64>,
    pub wall_time: bool,
}

impl<T: Scalar> RunConfig<T> {
    pub fn new(algorithm: Algorithm, epochs: usize, seed: u64) -> Self {
        Self {
            algorithm,
            metric: MetricPolicy::HessianBlock,
            sampler: SamplerKind::Uniform,
            inner_budget: 10,
            line_search: LineSearchParams::default(),
            epochs,
            seed,
            f_star: None,
            x0: None,
            refresh_every: 10,
            record_steps: false,
            certify_budget: None,
            g_every_iteration: false,
            stop_g_norm_sq: None,
            stop_rel_gap: None,
            wall_time: true,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.epochs == 0 {
            return Err(invalid("epochs must be at least 1"));
        }
        if self.inner_budget == 0 {
            return Err(invalid("inner budget must be at least 1"));
        }
        if self.refresh_every == 0 {
            return Err(invalid("refresh interval must be at least 1"));
        }
        self.line_search.validate()
    }
}

/// One outer iteration of a block method.
#[derive(Debug, Clone, PartialEq)]
pub struct StepRecord<T> {
    pub iteration: usize,
    pub block: usize,
    pub alpha: T,
    pub delta: T,
    pub q_value: T,
    pub m: T,
    pub big_m: T,
    pub lipschitz: T,
    pub eta_hat: Option<T>,
    pub trials: usize,
    pub inner_iterations: usize,
    /// No update was applied (zero step or round-off guard).
    pub skipped: bool,
}

#[derive(Debug, Clone)]
pub struct RunOutput<T> {
    pub state: SolverState<T>,
    pub trace: Vec<TraceRecord>,
    pub steps: Vec<StepRecord<T>>,
    /// `||G_k||^2` for `k = 0..=iterations` when requested.
    pub g_log: Vec<f64>,
    pub distribution: Option<BlockDistribution>,
}

pub fn run<T: Scalar>(
    problem: &CompositeProblem<T>,
    config: &RunConfig<T>,
) -> Result<RunOutput<T>> {
    match config.algorithm {
        Algorithm::VmBcd => vm_bcd_run(problem, config),
        Algorithm::RcdUnit => rcd_unit_run(problem, config),
        Algorithm::RcdShort => rcd_short_run(problem, config),
        Algorithm::Fista => fista_run(problem, config),
    }
}

fn initial_state<T: Scalar>(
    problem: &CompositeProblem<T>,
    config: &RunConfig<T>,
) -> Result<SolverState<T>> {
    match &config.x0 {
        Some(x0) => problem.state(x0.clone()),
        None => Ok(problem.zero_state()),
    }
}

/// Block distribution for the unit/short-step methods, where `M_i / alpha_i = L_i`.
fn rcd_distribution<T: Scalar>(
    problem: &CompositeProblem<T>,
    kind: SamplerKind,
) -> Result<BlockDistribution> {
    match kind {
        SamplerKind::Uniform => BlockDistribution::uniform(problem.num_blocks()),
        SamplerKind::Lipschitz | SamplerKind::Optimal => {
            BlockDistribution::lipschitz(problem.lipschitz())
        }
    }
}

struct EpochStats {
    alpha_sum: f64,
    iterations: usize,
    trials: usize,
}

impl EpochStats {
    fn new() -> Self {
        Self {
            alpha_sum: 0.0,
            iterations: 0,
            trials: 0,
        }
    }
}

fn record<T: Scalar>(
    problem: &CompositeProblem<T>,
    state: &SolverState<T>,
    epoch: usize,
    stats: &EpochStats,
    weighted_epoch: f64,
    wall_ms: f64,
    f_star: Option<T>,
) -> TraceRecord {
    let x = state.x();
    let zeros = x.iter().filter(|v| **v == T::zero()).count();
    let mut h = DefaultHasher::new();
    for (j, v) in x.iter().enumerate() {
        if *v != T::zero() {
            j.hash(&mut h);
        }
    }
    let objective = state.objective().to_f64_lossy();
    TraceRecord {
        epoch,
        objective,
        rel_gap: f_star.map(|f| crate::theory::relative_gap(objective, f.to_f64_lossy())),
        g_norm_sq: crate::theory::stationarity_norm_sq(problem, state).to_f64_lossy(),
        mean_alpha: if stats.iterations == 0 {
            0.0
        } else {
            stats.alpha_sum / stats.iterations as f64
        },
        sparsity: zeros as f64 / x.len().max(1) as f64,
        weighted_epoch,
        wall_ms,
        line_search_trials: stats.trials,
        support_fingerprint: h.finish(),
    }
}

fn reached_stop<T: Scalar>(config: &RunConfig<T>, rec: &TraceRecord) -> bool {
    config
        .stop_g_norm_sq
        .is_some_and(|tol| rec.g_norm_sq <= tol.to_f64_lossy())
        || matches!((config.stop_rel_gap, rec.rel_gap), (Some(tol), Some(gap)) if gap <= tol)
}
