use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::linalg::symmetric_eigenvalues;
use crate::problems::{CompositeProblem, SolverState, DENSE_BLOCK_LIMIT};
use crate::sampling::{BlockDistribution, BlockSampler, SamplerKind};
use crate::scalar::Scalar;
use crate::solvers::{
    initial_state, line_search, rcd_distribution, reached_stop, record, Algorithm, EpochStats,
    MetricPolicy, RunConfig, RunOutput, StepRecord,
};
use crate::subproblem::{
    certify_eta, closed_form, sparsa_solve, Floor, Metric, QuadraticModel, SubproblemSolution,
};
use crate::theory::stationarity_norm_sq;

const METRIC_FLOOR: f64 = 1e-10;

/// What one iteration did.
struct Outcome<T> {
    alpha: T,
    trials: usize,
    step: Option<StepRecord<T>>,
}

/// Dense `kappa A_i^T A_i + eps I` with its eigenvalue bounds, computed once per run.
struct FixedBlock<T> {
    matrix: Vec<T>,
    m: T,
    big_m: T,
}

fn fixed_blocks<T: Scalar>(problem: &CompositeProblem<T>) -> Vec<Option<FixedBlock<T>>> {
    let eps = T::lit(METRIC_FLOOR);
    (0..problem.num_blocks())
        .map(|i| {
            let n = problem.partition().block_size(i);
            if n > DENSE_BLOCK_LIMIT {
                return None;
            }
            let mut matrix = problem.bound_hessian_block(i).dense();
            let eig = symmetric_eigenvalues(n, &matrix);
            (0..n).for_each(|k| matrix[k * n + k] += eps);
            Some(FixedBlock {
                matrix,
                m: eig[0] + eps,
                big_m: eig[n - 1] + eps,
            })
        })
        .collect()
}

/// Metric `H_i` for the given policy at the current state.
pub fn block_metric<'a, T: Scalar>(
    problem: &'a CompositeProblem<T>,
    state: &SolverState<T>,
    i: usize,
    policy: MetricPolicy,
) -> Result<Metric<'a, T>> {
    build_metric(problem, state, i, policy, None)
}

fn build_metric<'a, T: Scalar>(
    problem: &'a CompositeProblem<T>,
    state: &SolverState<T>,
    i: usize,
    policy: MetricPolicy,
    fixed: Option<&[Option<FixedBlock<T>>]>,
) -> Result<Metric<'a, T>> {
    let n = problem.partition().block_size(i);
    let eps = T::lit(METRIC_FLOOR);
    match policy {
        MetricPolicy::ScaledLipschitz => Metric::scaled_identity(n, problem.lipschitz()[i]),
        MetricPolicy::ScaledLmin => Metric::scaled_identity(n, problem.l_min()),
        MetricPolicy::HessianBlock => {
            let hess = problem.hessian_block(state, i);
            if n > DENSE_BLOCK_LIMIT {
                return Metric::operator(hess, eps);
            }
            let floor = if problem.is_convex() {
                Floor::Add(eps)
            } else {
                Floor::RaiseTo(eps)
            };
            Metric::dense(n, hess.dense(), floor)
        }
        MetricPolicy::FixedGlobalBound => match fixed.and_then(|f| f[i].as_ref()) {
            Some(b) => Ok(Metric::dense_with_bounds(n, b.matrix.clone(), b.m, b.big_m)),
            None if n > DENSE_BLOCK_LIMIT => Metric::operator(problem.bound_hessian_block(i), eps),
            None => {
                let dense = problem.bound_hessian_block(i).dense();
                Metric::dense(n, dense, Floor::Add(eps))
            }
        },
    }
}

fn is_zero<T: Scalar>(d: &[T]) -> bool {
    d.iter().all(|v| *v == T::zero())
}

/// Shared epoch loop of the block methods.
fn block_loop<T: Scalar>(
    problem: &CompositeProblem<T>,
    config: &RunConfig<T>,
    dist: BlockDistribution,
    mut iterate: impl FnMut(&mut SolverState<T>, usize, usize) -> Result<Outcome<T>>,
) -> Result<RunOutput<T>> {
    config.validate()?;
    let start = Instant::now();
    let elapsed = || {
        if config.wall_time {
            start.elapsed().as_secs_f64() * 1e3
        } else {
            0.0
        }
    };
    let mut state = initial_state(problem, config)?;
    let sampler = BlockSampler::new(dist);
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let n_blocks = problem.num_blocks();
    let a = problem.matrix();
    let nnz = a.nnz().max(1) as f64;
    let block_weight: Vec<f64> = (0..n_blocks).map(|i| a.block_nnz(i) as f64 / nnz).collect();

    let mut trace = vec![record(
        problem,
        &state,
        0,
        &EpochStats::new(),
        0.0,
        elapsed(),
        config.f_star,
    )];
    let mut steps = Vec::new();
    let mut g_log = Vec::new();
    let mut weighted = 0.0;
    let mut k = 0;
    if !reached_stop(config, &trace[0]) {
        for epoch in 1..=config.epochs {
            let mut stats = EpochStats::new();
            for _ in 0..n_blocks {
                if config.g_every_iteration {
                    g_log.push(stationarity_norm_sq(problem, &state).to_f64_lossy());
                }
                let i = sampler.sample(&mut rng);
                let out = iterate(&mut state, i, k)?;
                stats.alpha_sum += out.alpha.to_f64_lossy();
                stats.iterations += 1;
                stats.trials += out.trials;
                weighted += block_weight[i];
                if let Some(s) = out.step {
                    steps.push(s);
                }
                k += 1;
            }
            if epoch % config.refresh_every == 0 {
                problem.refresh(&mut state)?;
            }
            if !state.objective().is_finite() {
                return Err(Error::NonFinite("objective"));
            }
            let rec = record(
                problem,
                &state,
                epoch,
                &stats,
                weighted,
                elapsed(),
                config.f_star,
            );
            let stop = reached_stop(config, &rec);
            trace.push(rec);
            if stop {
                break;
            }
        }
    }
    if config.g_every_iteration {
        g_log.push(stationarity_norm_sq(problem, &state).to_f64_lossy());
    }
    Ok(RunOutput {
        state,
        trace,
        steps,
        g_log,
        distribution: Some(sampler.distribution().clone()),
    })
}

fn solve<T: Scalar>(model: &QuadraticModel<'_, T>, budget: usize) -> Result<SubproblemSolution<T>> {
    match closed_form(model) {
        Ok(s) => Ok(s),
        Err(Error::Unsupported(_)) => sparsa_solve(model, budget),
        Err(e) => Err(e),
    }
}

/// Inexact variable-metric BCD with Armijo line search.
pub fn vm_bcd_run<T: Scalar>(
    problem: &CompositeProblem<T>,
    config: &RunConfig<T>,
) -> Result<RunOutput<T>> {
    if config.algorithm != Algorithm::VmBcd {
        return Err(Error::Unsupported(format!(
            "vm_bcd_run called with {}",
            config.algorithm.name()
        )));
    }
    config.validate()?;
    let fixed = (config.metric == MetricPolicy::FixedGlobalBound).then(|| fixed_blocks(problem));
    let fixed = fixed.as_deref();
    let dist = match config.sampler {
        SamplerKind::Uniform => BlockDistribution::uniform(problem.num_blocks())?,
        SamplerKind::Lipschitz => BlockDistribution::lipschitz(problem.lipschitz())?,
        SamplerKind::Optimal => {
            // M_i taken at the starting point with unit step bounds
            let s0 = initial_state(problem, config)?;
            let m: Vec<T> = (0..problem.num_blocks())
                .map(|i| build_metric(problem, &s0, i, config.metric, fixed).map(|h| h.big_m()))
                .collect::<Result<_>>()?;
            BlockDistribution::optimal(&m, &vec![T::one(); m.len()])?
        }
    };
    let ls = config.line_search;
    block_loop(problem, config, dist, |state, i, k| {
        let metric = build_metric(problem, state, i, config.metric, fixed)?;
        let (m, big_m) = (metric.m(), metric.big_m());
        let range = problem.partition().range(i);
        let grad = problem.partial_gradient(state, i);
        let model = QuadraticModel::new(grad, metric, state.x()[range].to_vec(), problem.reg(), i)?;
        let sol = solve(&model, config.inner_budget)?;
        let eta_hat = match (config.record_steps, config.certify_budget) {
            (true, Some(b)) => Some(certify_eta(&model, &sol.d, b)?),
            _ => None,
        };
        let mut rec = StepRecord {
            iteration: k,
            block: i,
            alpha: T::one(),
            delta: sol.delta,
            q_value: sol.q_value,
            m,
            big_m,
            lipschitz: problem.lipschitz()[i],
            eta_hat,
            trials: 0,
            inner_iterations: sol.inner_iterations,
            skipped: true,
        };
        let mut out = Outcome {
            alpha: T::one(),
            trials: 0,
            step: None,
        };
        if !is_zero(&sol.d) && sol.delta < T::zero() && sol.q_value < T::zero() {
            let ad = problem.block_direction(i, &sol.d);
            if let Some(res) = line_search(problem, state, i, &sol.d, &ad, sol.delta, &ls)? {
                problem.apply_step(state, i, &sol.d, &ad, res.alpha, res.change);
                rec.alpha = res.alpha;
                rec.trials = res.trials;
                rec.skipped = false;
                out.alpha = res.alpha;
                out.trials = res.trials;
            }
        }
        if config.record_steps {
            out.step = Some(rec);
        }
        Ok(out)
    })
}

/// `H_i = c I` with the closed-form step scaled by `alpha`, applied without line search.
fn fixed_step_iteration<T: Scalar>(
    problem: &CompositeProblem<T>,
    config: &RunConfig<T>,
    state: &mut SolverState<T>,
    i: usize,
    k: usize,
    c: T,
    alpha: T,
) -> Result<Outcome<T>> {
    let n = problem.partition().block_size(i);
    let range = problem.partition().range(i);
    let grad = problem.partial_gradient(state, i);
    let model = QuadraticModel::new(
        grad,
        Metric::scaled_identity(n, c)?,
        state.x()[range].to_vec(),
        problem.reg(),
        i,
    )?;
    let sol = closed_form(&model)?;
    let mut skipped = true;
    if !is_zero(&sol.d) {
        let ad = problem.block_direction(i, &sol.d);
        let change = problem.trial_change(state, i, &sol.d, &ad, alpha);
        // the step provably does not increase F; a positive change is round-off
        if change <= T::zero() {
            problem.apply_step(state, i, &sol.d, &ad, alpha, change);
            skipped = false;
        }
    }
    let step = config.record_steps.then(|| StepRecord {
        iteration: k,
        block: i,
        alpha,
        delta: sol.delta,
        q_value: sol.q_value,
        m: c,
        big_m: c,
        lipschitz: problem.lipschitz()[i],
        eta_hat: config.certify_budget.map(|_| T::zero()),
        trials: 1,
        inner_iterations: 0,
        skipped,
    });
    Ok(Outcome {
        alpha,
        trials: 1,
        step,
    })
}

/// Randomized BCD with `H_i = L_i I` and unit steps.
pub fn rcd_unit_run<T: Scalar>(
    problem: &CompositeProblem<T>,
    config: &RunConfig<T>,
) -> Result<RunOutput<T>> {
    if config.algorithm != Algorithm::RcdUnit {
        return Err(Error::Unsupported(format!(
            "rcd_unit_run called with {}",
            config.algorithm.name()
        )));
    }
    let dist = rcd_distribution(problem, config.sampler)?;
    let l = problem.lipschitz();
    block_loop(problem, config, dist, |state, i, k| {
        fixed_step_iteration(problem, config, state, i, k, l[i], T::one())
    })
}

/// Randomized BCD with `H_i = L_min I` and steps `L_min / L_i`.
pub fn rcd_short_run<T: Scalar>(
    problem: &CompositeProblem<T>,
    config: &RunConfig<T>,
) -> Result<RunOutput<T>> {
    if config.algorithm != Algorithm::RcdShort {
        return Err(Error::Unsupported(format!(
            "rcd_short_run called with {}",
            config.algorithm.name()
        )));
    }
    let dist = rcd_distribution(problem, config.sampler)?;
    let l = problem.lipschitz();
    let l_min = problem.l_min();
    block_loop(problem, config, dist, |state, i, k| {
        fixed_step_iteration(problem, config, state, i, k, l_min, l_min / l[i])
    })
}
