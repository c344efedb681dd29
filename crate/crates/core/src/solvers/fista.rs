use std::time::Instant;

use crate::error::{Error, Result};
use crate::problems::CompositeProblem;
use crate::scalar::Scalar;
use crate::solvers::{
    initial_state, reached_stop, record, Algorithm, EpochStats, RunConfig, RunOutput,
};

/// Accelerated proximal gradient with fixed step `1 / L_f`, no restart. One iteration per epoch.
pub fn fista_run<T: Scalar>(
    problem: &CompositeProblem<T>,
    config: &RunConfig<T>,
) -> Result<RunOutput<T>> {
    if config.algorithm != Algorithm::Fista {
        return Err(Error::Unsupported(format!(
            "fista_run called with {}",
            config.algorithm.name()
        )));
    }
    if !problem.is_convex() {
        return Err(Error::Unsupported(format!(
            "accelerated proximal gradient needs a convex loss, got {}",
            problem.loss().kind().name()
        )));
    }
    config.validate()?;
    let start = Instant::now();
    let elapsed = || {
        if config.wall_time {
            start.elapsed().as_secs_f64() * 1e3
        } else {
            0.0
        }
    };
    let a = problem.matrix();
    let loss = problem.loss();
    let partition = problem.partition();
    let step = T::one() / problem.global_lipschitz();

    let mut state = initial_state(problem, config)?;
    let mut x = state.x().to_vec();
    let mut z_x = state.z().to_vec();
    let mut y = x.clone();
    let mut z_y = z_x.clone();
    let mut t = T::one();

    let mut stats = EpochStats::new();
    let mut trace = vec![record(
        problem,
        &state,
        0,
        &stats,
        0.0,
        elapsed(),
        config.f_star,
    )];
    let mut g_log = Vec::new();
    if !reached_stop(config, &trace[0]) {
        for epoch in 1..=config.epochs {
            if config.g_every_iteration {
                g_log.push(crate::theory::stationarity_norm_sq(problem, &state).to_f64_lossy());
            }
            let g_rows: Vec<T> = z_y
                .iter()
                .enumerate()
                .map(|(r, &z)| loss.row_grad(r, z))
                .collect();
            let grad = a.tmatvec(&g_rows);
            let mut x_new: Vec<T> = y.iter().zip(&grad).map(|(&v, &g)| v - step * g).collect();
            for i in 0..partition.num_blocks() {
                problem
                    .reg()
                    .prox_block(i, &mut x_new[partition.range(i)], step);
            }
            let z_new = a.matvec(&x_new);
            let t_new = (T::one() + (T::one() + T::lit(4.0) * t * t).sqrt()) / T::lit(2.0);
            let momentum = (t - T::one()) / t_new;
            y = x_new
                .iter()
                .zip(&x)
                .map(|(&n, &o)| n + momentum * (n - o))
                .collect();
            z_y = z_new
                .iter()
                .zip(&z_x)
                .map(|(&n, &o)| n + momentum * (n - o))
                .collect();
            x = x_new;
            z_x = z_new;
            t = t_new;

            state = problem.state(x.clone())?;
            stats = EpochStats {
                alpha_sum: 1.0,
                iterations: 1,
                trials: 1,
            };
            let rec = record(
                problem,
                &state,
                epoch,
                &stats,
                epoch as f64,
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
        g_log.push(crate::theory::stationarity_norm_sq(problem, &state).to_f64_lossy());
    }
    Ok(RunOutput {
        state,
        trace,
        steps: Vec::new(),
        g_log,
        distribution: None,
    })
}
