use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;
use vmbcd::problems::{RegKind, SeparableRegularizer};
use vmbcd::subproblem::{
    certify_eta, closed_form, q_eval, sparsa_solve, Floor, Metric, QuadraticModel,
};

fn vecs(n: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-3.0..3.0f64, n)
}

/// Random SPD matrix `B^T B + 0.1 I` in row-major order.
fn spd(n: usize, entries: &[f64]) -> Vec<f64> {
    let b = DMatrix::from_row_slice(n, n, entries);
    let h = b.transpose() * &b + DMatrix::identity(n, n) * 0.1;
    (0..n * n).map(|k| h[(k / n, k % n)]).collect()
}

/// Cyclic exact coordinate minimization of `Q` for the l1 case.
fn l1_reference(g: &[f64], h: &[f64], x: &[f64], lambda: f64) -> Vec<f64> {
    let n = g.len();
    let mut d = vec![0.0; n];
    for _ in 0..20_000 {
        for k in 0..n {
            let hk = h[k * n + k];
            let r: f64 = g[k]
                + (0..n)
                    .filter(|&j| j != k)
                    .map(|j| h[k * n + j] * d[j])
                    .sum::<f64>();
            let v = x[k] - r / hk;
            let u = v.signum() * (v.abs() - lambda / hk).max(0.0);
            d[k] = u - x[k];
        }
    }
    d
}

proptest! {
    #[test]
    fn identity_prox_satisfies_optimality((g, x) in (1usize..6).prop_flat_map(|n| (vecs(n), vecs(n))),
                                          c in 0.1..10.0f64, lambda in 0.0..3.0f64) {
        let n = g.len();
        for kind in [RegKind::L1, RegKind::GroupL2] {
            let r = SeparableRegularizer::uniform(kind, lambda, 1).unwrap();
            let m = QuadraticModel::new(g.clone(), Metric::scaled_identity(n, c).unwrap(), x.clone(), &r, 0).unwrap();
            let d = closed_form(&m).unwrap().d;
            let u: Vec<f64> = x.iter().zip(&d).map(|(a, b)| a + b).collect();
            let res: Vec<f64> = g.iter().zip(&d).map(|(g, d)| g + c * d).collect();
            let tol = 1e-9 * (1.0 + lambda + g.iter().map(|v| v.abs()).fold(0.0, f64::max));
            match kind {
                RegKind::L1 => for k in 0..n {
                    if u[k] != 0.0 {
                        prop_assert!((res[k] + lambda * u[k].signum()).abs() <= tol);
                    } else {
                        prop_assert!(res[k].abs() <= lambda + tol);
                    }
                },
                _ => {
                    let nu = u.iter().map(|v| v * v).sum::<f64>().sqrt();
                    if nu > 0.0 {
                        for k in 0..n {
                            prop_assert!((res[k] + lambda * u[k] / nu).abs() <= tol);
                        }
                    } else {
                        prop_assert!(res.iter().map(|v| v * v).sum::<f64>().sqrt() <= lambda + tol);
                    }
                }
            }
            // optimality against random perturbations
            let q0 = q_eval(&m, &d);
            for k in 0..n {
                for s in [-1e-3, 1e-3] {
                    let mut e = d.clone();
                    e[k] += s;
                    prop_assert!(q_eval(&m, &e) >= q0 - 1e-12);
                }
            }
        }
    }

    #[test]
    fn sparsa_improves_with_budget((g, x, b) in (1usize..6).prop_flat_map(|n| (vecs(n), vecs(n), vecs(n * n))),
                                  lambda in 0.0..2.0f64, group in any::<bool>()) {
        let n = g.len();
        let kind = if group { RegKind::GroupL2 } else { RegKind::L1 };
        let r = SeparableRegularizer::uniform(kind, lambda, 1).unwrap();
        let h = spd(n, &b);
        let mut prev = 0.0f64;
        for budget in [0usize, 1, 2, 4, 8, 32, 128] {
            let m = QuadraticModel::new(g.clone(), Metric::dense(n, h.clone(), Floor::Add(0.0)).unwrap(), x.clone(), &r, 0).unwrap();
            let s = sparsa_solve(&m, budget).unwrap();
            prop_assert!(s.q_value <= 1e-14);
            prop_assert!(s.q_value <= prev + 1e-12 * (1.0 + prev.abs()), "budget {budget}: {} > {prev}", s.q_value);
            prop_assert!((s.q_value - q_eval(&m, &s.d)).abs() <= 1e-9 * (1.0 + s.q_value.abs()));
            prop_assert!(s.inner_iterations <= budget);
            let eta = certify_eta(&m, &s.d, 2000).unwrap();
            prop_assert!((0.0..=1.0).contains(&eta));
            if budget >= 1 && s.q_value < -1e-12 {
                prop_assert!(eta < 1.0);
            }
            prev = s.q_value;
        }
    }

    #[test]
    fn sparsa_matches_reference_on_dense_metric((g, x, b) in (1usize..5).prop_flat_map(|n| (vecs(n), vecs(n), vecs(n * n))),
                                               lambda in 0.0..2.0f64) {
        let n = g.len();
        let h = spd(n, &b);
        let r = SeparableRegularizer::uniform(RegKind::L1, lambda, 1).unwrap();
        let m = QuadraticModel::new(g.clone(), Metric::dense(n, h.clone(), Floor::Add(0.0)).unwrap(), x.clone(), &r, 0).unwrap();
        let s = sparsa_solve(&m, 2000).unwrap();
        let reference = l1_reference(&g, &h, &x, lambda);
        let q_ref = q_eval(&m, &reference);
        prop_assert!((s.q_value - q_ref).abs() <= 1e-7 * (1.0 + q_ref.abs()), "{} vs {q_ref}", s.q_value);
    }

    #[test]
    fn smooth_model_gives_newton_step((g, b) in (1usize..6).prop_flat_map(|n| (vecs(n), vecs(n * n)))) {
        let n = g.len();
        let h = spd(n, &b);
        let r = SeparableRegularizer::<f64>::zero(1);
        let m = QuadraticModel::new(g.clone(), Metric::dense(n, h.clone(), Floor::Add(0.0)).unwrap(), vec![0.0; n], &r, 0).unwrap();
        let s = sparsa_solve(&m, 2000).unwrap();
        let newton = DMatrix::from_row_slice(n, n, &h).cholesky().unwrap().solve(&DVector::from_vec(g.clone()));
        let q_newton = -0.5 * DVector::from_vec(g).dot(&newton);
        prop_assert!((s.q_value - q_newton).abs() <= 1e-7 * (1.0 + q_newton.abs()));
    }
}

#[test]
fn closed_form_certifies_as_exact() {
    let r = SeparableRegularizer::uniform(RegKind::GroupL2, 0.5, 1).unwrap();
    let m = QuadraticModel::new(
        vec![1.0, -2.0, 3.0],
        Metric::scaled_identity(3, 2.0).unwrap(),
        vec![0.1, 0.0, -0.4],
        &r,
        0,
    )
    .unwrap();
    let d = closed_form(&m).unwrap().d;
    assert!(certify_eta(&m, &d, 2000).unwrap() <= 1e-12);
    assert_eq!(certify_eta(&m, &[0.0; 3], 2000).unwrap(), 1.0);
}

#[test]
fn metric_floors() {
    // eigenvalues of [[1, 2], [2, 1]] are -1 and 3
    let m = Metric::<f64>::dense(2, vec![1.0, 2.0, 2.0, 1.0], Floor::RaiseTo(1e-10)).unwrap();
    assert!((m.m() - 1e-10).abs() < 1e-12 && (m.big_m() - (4.0 + 1e-10)).abs() < 1e-9);
    assert!(Metric::dense(2, vec![1.0, 2.0, 2.0, 1.0], Floor::Add(1e-10)).is_err());
    let m = Metric::<f64>::dense(2, vec![2.0, 0.0, 0.0, 5.0], Floor::Add(1e-10)).unwrap();
    assert!((m.m() - 2.0).abs() < 1e-9 && (m.big_m() - 5.0).abs() < 1e-9);
    assert!(Metric::<f64>::scaled_identity(2, 0.0).is_err());
    assert!(Metric::dense(2, vec![1.0; 3], Floor::Add(0.0)).is_err());
}
