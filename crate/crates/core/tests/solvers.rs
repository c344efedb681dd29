mod common;

use std::path::Path;

use common::{dense_of, dense_problem, synth_problem};
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use vmbcd::experiment::{build_problem, parse_config};
use vmbcd::problems::{CompositeProblem, LossKind, RegKind};
use vmbcd::sampling::SamplerKind;
use vmbcd::solvers::{run, Algorithm, MetricPolicy, RunConfig};

fn config(algorithm: Algorithm, epochs: usize, seed: u64) -> RunConfig<f64> {
    let mut c = RunConfig::new(algorithm, epochs, seed);
    c.wall_time = false;
    c
}

/// Long VM-BCD run; the best objective seen.
fn reference(p: &CompositeProblem<f64>) -> f64 {
    let mut c = config(Algorithm::VmBcd, 2000, 0);
    c.inner_budget = 50;
    c.stop_g_norm_sq = Some(1e-24);
    run(p, &c)
        .unwrap()
        .trace
        .iter()
        .map(|r| r.objective)
        .fold(f64::INFINITY, f64::min)
}

/// +-1 design, so every column has squared norm exactly `rows`.
fn sign_problem(seed: u64, rows: usize, cols: usize) -> CompositeProblem<f64> {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    let a: Vec<f64> = (0..rows * cols)
        .map(|_| if r.random::<bool>() { 1.0 } else { -1.0 })
        .collect();
    let b: Vec<f64> = (0..rows).map(|_| r.random_range(-1.0..1.0)).collect();
    dense_problem(rows, cols, &a, b, 1, LossKind::Squared, RegKind::L1, 0.5)
}

#[test]
fn equal_lipschitz_makes_unit_and_short_steps_identical() {
    let p = sign_problem(1, 20, 12);
    assert!(p.lipschitz().iter().all(|&l| l == p.lipschitz()[0]));
    for sampler in [SamplerKind::Uniform, SamplerKind::Lipschitz] {
        let mut a = config(Algorithm::RcdUnit, 30, 5);
        a.sampler = sampler;
        let mut b = a.clone();
        b.algorithm = Algorithm::RcdShort;
        let (ra, rb) = (run(&p, &a).unwrap(), run(&p, &b).unwrap());
        assert_eq!(ra.state.x(), rb.state.x());
        assert_eq!(ra.trace, rb.trace);
    }
}

#[test]
fn smooth_unit_step_is_gradient_coordinate_descent() {
    let p = synth_problem(4, 30, 12, 3, LossKind::Squared, RegKind::Zero, 0.0);
    let mut c = config(Algorithm::RcdUnit, 10, 9);
    c.record_steps = true;
    let out = run(&p, &c).unwrap();
    let (rows, cols, a) = dense_of(&p);
    let b = p.dataset().labels().to_vec();
    let mut x = vec![0.0; cols];
    for s in &out.steps {
        let residual: Vec<f64> = (0..rows)
            .map(|r| (0..cols).map(|j| a[r * cols + j] * x[j]).sum::<f64>() - b[r])
            .collect();
        let range = p.partition().range(s.block);
        let grad: Vec<f64> = range
            .clone()
            .map(|j| (0..rows).map(|r| a[r * cols + j] * residual[r]).sum())
            .collect();
        range
            .zip(&grad)
            .for_each(|(j, g)| x[j] -= g / p.lipschitz()[s.block]);
    }
    assert_eq!(out.steps.len(), 10 * p.num_blocks());
    for (u, v) in out.state.x().iter().zip(&x) {
        assert!((u - v).abs() <= 1e-9 * (1.0 + v.abs()), "{u} vs {v}");
    }
}

#[test]
fn stationary_start_is_left_alone() {
    let p = synth_problem(2, 25, 10, 2, LossKind::Squared, RegKind::GroupL2, 1e3);
    for algorithm in [
        Algorithm::VmBcd,
        Algorithm::RcdUnit,
        Algorithm::RcdShort,
        Algorithm::Fista,
    ] {
        let out = run(&p, &config(algorithm, 5, 0)).unwrap();
        assert!(
            out.state.x().iter().all(|v| *v == 0.0),
            "{}",
            algorithm.name()
        );
        assert!(out
            .trace
            .iter()
            .all(|r| r.objective == out.trace[0].objective));
    }
}

#[test]
fn runs_are_deterministic_in_the_seed() {
    let p = synth_problem(3, 40, 20, 4, LossKind::SquaredHinge, RegKind::L1, 0.05);
    for algorithm in [Algorithm::VmBcd, Algorithm::RcdUnit, Algorithm::RcdShort] {
        let mut c = config(algorithm, 8, 11);
        c.record_steps = true;
        let (a, b) = (run(&p, &c).unwrap(), run(&p, &c).unwrap());
        assert_eq!(a.state.x(), b.state.x());
        assert_eq!(a.trace, b.trace);
        assert_eq!(a.steps, b.steps);
        c.seed = 12;
        let other = run(&p, &c).unwrap();
        let blocks = |o: &vmbcd::solvers::RunOutput<f64>| {
            o.steps.iter().map(|s| s.block).collect::<Vec<_>>()
        };
        assert_ne!(blocks(&a), blocks(&other));
    }
}

#[test]
fn objective_never_increases() {
    for (loss, reg) in [
        (LossKind::Squared, RegKind::L1),
        (LossKind::Biweight, RegKind::GroupL2),
    ] {
        let p = synth_problem(6, 40, 16, 4, loss, reg, 0.1);
        for algorithm in [Algorithm::VmBcd, Algorithm::RcdUnit, Algorithm::RcdShort] {
            for metric in [MetricPolicy::HessianBlock, MetricPolicy::FixedGlobalBound] {
                let mut c = config(algorithm, 20, 1);
                c.metric = metric;
                let t = run(&p, &c).unwrap().trace;
                assert!(t.windows(2).all(|w| w[1].objective <= w[0].objective));
            }
        }
    }
}

#[test]
fn fista_refuses_nonconvex_and_solves_lasso() {
    let bw = synth_problem(1, 20, 8, 2, LossKind::Biweight, RegKind::L1, 0.1);
    assert!(run(&bw, &config(Algorithm::Fista, 5, 0)).is_err());
    let p = synth_problem(1, 60, 20, 1, LossKind::Squared, RegKind::L1, 0.1);
    let f_star = reference(&p);
    let t = run(&p, &config(Algorithm::Fista, 3000, 0)).unwrap().trace;
    let last = t.last().unwrap().objective;
    assert!(
        (last - f_star) / f_star.abs() <= 1e-8,
        "F = {last}, F* = {f_star}"
    );
}

#[test]
fn active_set_settles() {
    let text = "\
dataset = synthetic
synth.seed = 1
synth.rows = 300
synth.cols = 150
synth.heavy = 10
synth.ratio = 8
synth.correlation = 0.8
synth.support_blocks = 0-9
loss = squared
regularizer = l1
lambda = 0.1
block_size = 1

[run]
name = a
algorithm = rcd-unit
epochs = 150
";
    let cfg = parse_config(text, Path::new("."), None).unwrap();
    let p = build_problem(&cfg.problem).unwrap();
    for sampler in [SamplerKind::Uniform, SamplerKind::Lipschitz] {
        let mut c = config(Algorithm::RcdUnit, 150, 3);
        c.sampler = sampler;
        let t = run(&p, &c).unwrap().trace;
        let tail = &t[t.len() - t.len() / 5..];
        assert!(tail
            .iter()
            .all(|r| r.support_fingerprint == tail[0].support_fingerprint));
        assert!(tail
            .iter()
            .all(|r| r.sparsity == tail[0].sparsity && r.sparsity > 0.0));
    }
}

#[test]
fn optimal_sampler_uses_metric_bounds() {
    let p = synth_problem(8, 30, 12, 3, LossKind::Squared, RegKind::L1, 0.1);
    let mut c = config(Algorithm::VmBcd, 1, 0);
    c.sampler = SamplerKind::Optimal;
    let dist = run(&p, &c).unwrap().distribution.unwrap();
    let (rows, cols, a) = dense_of(&p);
    let a = DMatrix::from_row_slice(rows, cols, &a);
    let m: Vec<f64> = (0..p.num_blocks())
        .map(|i| {
            let r = p.partition().range(i);
            let ai = a.columns(r.start, r.len()).into_owned();
            (ai.transpose() * &ai).symmetric_eigen().eigenvalues.max() + 1e-10
        })
        .collect();
    let total: f64 = m.iter().sum();
    for (q, mi) in dist.probabilities().iter().zip(&m) {
        assert!((q - mi / total).abs() <= 1e-9, "{q} vs {}", mi / total);
    }
    for algorithm in [Algorithm::RcdUnit, Algorithm::RcdShort] {
        let mut c = config(algorithm, 1, 0);
        c.sampler = SamplerKind::Optimal;
        let d = run(&p, &c).unwrap().distribution.unwrap();
        c.sampler = SamplerKind::Lipschitz;
        assert_eq!(d, run(&p, &c).unwrap().distribution.unwrap());
    }
}

#[test]
fn invalid_configs_are_rejected() {
    let p = synth_problem(1, 10, 4, 2, LossKind::Squared, RegKind::L1, 0.1);
    assert!(run(&p, &config(Algorithm::VmBcd, 0, 0)).is_err());
    let mut c = config(Algorithm::VmBcd, 3, 0);
    c.inner_budget = 0;
    assert!(run(&p, &c).is_err());
    let mut c = config(Algorithm::RcdUnit, 3, 0);
    c.x0 = Some(vec![0.0; 3]);
    assert!(run(&p, &c).is_err());
}

#[test]
fn stops_at_relative_gap() {
    let p = synth_problem(5, 60, 20, 2, LossKind::Squared, RegKind::L1, 0.1);
    let f_star = reference(&p);
    let mut c = config(Algorithm::VmBcd, 500, 2);
    c.f_star = Some(f_star);
    c.stop_rel_gap = Some(1e-6);
    let t = run(&p, &c).unwrap().trace;
    assert!(t.len() < 501);
    assert!(t.last().unwrap().rel_gap.unwrap() <= 1e-6);
    assert!(t[..t.len() - 1].iter().all(|r| r.rel_gap.unwrap() > 1e-6));
}
