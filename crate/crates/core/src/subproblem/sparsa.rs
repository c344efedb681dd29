use crate::error::{Error, Result};
use crate::scalar::{dot, norm_sq, Scalar};
use crate::subproblem::{closed_form, q_eval, QuadraticModel, SubproblemSolution};

const SIGMA_MIN: f64 = 1e-10;
const SIGMA_MAX: f64 = 1e10;
const ACCEPT: f64 = 1e-4;
const MAX_DOUBLINGS: usize = 30;

/// Inner budget used to certify inexactness.
pub const REFERENCE_BUDGET: usize = 2000;

/// Monotone spectral proximal gradient on `Q`, starting from `d = 0`, for at most `budget`
/// outer iterations. One metric product per trial point.
pub fn sparsa_solve<T: Scalar>(
    model: &QuadraticModel<'_, T>,
    budget: usize,
) -> Result<SubproblemSolution<T>> {
    let n = model.size();
    let g = model.grad();
    let h = model.metric();
    let (lo, hi) = (T::lit(SIGMA_MIN), T::lit(SIGMA_MAX));
    let accept = T::lit(ACCEPT);
    let half = T::lit(0.5);

    let mut d = vec![T::zero(); n];
    let mut hd = vec![T::zero(); n];
    let mut q = T::zero();
    let mut sigma = h.norm_estimate().max(lo).min(hi);
    let mut cand_h = vec![T::zero(); n];
    let mut iterations = 0;

    for _ in 0..budget {
        let mut accepted = None;
        for _ in 0..=MAX_DOUBLINGS {
            let v: Vec<T> = (0..n)
                .map(|k| model.x()[k] + d[k] - (g[k] + hd[k]) / sigma)
                .collect();
            let cand = model.prox_step(v, T::one() / sigma);
            h.apply(&cand, &mut cand_h);
            let q_new = dot(g, &cand) + half * dot(&cand, &cand_h) + model.psi_change(&cand);
            if !q_new.is_finite() {
                return Err(Error::NonFinite("subproblem objective"));
            }
            let step: Vec<T> = cand.iter().zip(&d).map(|(&a, &b)| a - b).collect();
            let step_sq = norm_sq(&step);
            if q_new <= q - accept * sigma * step_sq * half {
                accepted = Some((cand, q_new, step, step_sq));
                break;
            }
            sigma = (sigma + sigma).min(hi);
        }
        let Some((cand, q_new, step, step_sq)) = accepted else {
            break;
        };
        iterations += 1;
        if step_sq == T::zero() {
            break;
        }
        let y: Vec<T> = cand_h.iter().zip(&hd).map(|(&a, &b)| a - b).collect();
        sigma = (dot(&step, &y) / step_sq).max(lo).min(hi);
        d = cand;
        hd.copy_from_slice(&cand_h);
        q = q_new;
    }
    let delta = q - half * dot(&d, &hd);
    Ok(SubproblemSolution {
        d,
        q_value: q,
        delta,
        inner_iterations: iterations,
    })
}

/// Estimated `eta` such that `Q(d) - Q* <= eta (0 - Q*)`, against a long reference solve and,
/// when available, the closed form. Clamped to `[0, 1]`.
pub fn certify_eta<T: Scalar>(model: &QuadraticModel<'_, T>, d: &[T], budget: usize) -> Result<T> {
    let mut q_star = sparsa_solve(model, budget)?.q_value;
    if let Ok(exact) = closed_form(model) {
        q_star = q_star.min(exact.q_value);
    }
    let q = q_eval(model, d);
    q_star = q_star.min(q);
    if q_star >= T::zero() {
        return Ok(T::zero());
    }
    Ok(((q - q_star) / -q_star).max(T::zero()).min(T::one()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problems::{RegKind, SeparableRegularizer};
    use crate::subproblem::{prox_identity_group, Floor, Metric};

    #[test]
    fn one_step_with_identity_matches_group_prox() {
        let r = SeparableRegularizer::uniform(RegKind::GroupL2, 0.7, 1).unwrap();
        let mk = || {
            QuadraticModel::new(
                vec![1.0, -2.0, 0.5],
                Metric::scaled_identity(3, 1.7).unwrap(),
                vec![0.3, 0.0, -0.1],
                &r,
                0,
            )
            .unwrap()
        };
        let a = sparsa_solve(&mk(), 1).unwrap();
        let b = prox_identity_group(&mk()).unwrap();
        assert_eq!(a.d, b.d);
        assert_eq!(a.inner_iterations, 1);
    }

    #[test]
    fn stationary_model_returns_zero() {
        let r = SeparableRegularizer::uniform(RegKind::L1, 1.0, 1).unwrap();
        let h = Metric::dense(2, vec![2.0, 0.5, 0.5, 1.0], Floor::Add(0.0)).unwrap();
        let m = QuadraticModel::new(vec![0.5, -0.5], h, vec![0.0, 0.0], &r, 0).unwrap();
        let s = sparsa_solve(&m, 10).unwrap();
        assert_eq!(s.d, vec![0.0, 0.0]);
        assert_eq!(s.q_value, 0.0);
    }

    #[test]
    fn smooth_model_reaches_newton_step() {
        let r = SeparableRegularizer::<f64>::zero(1);
        let h = Metric::dense(2, vec![4.0, 1.0, 1.0, 3.0], Floor::Add(0.0)).unwrap();
        let m = QuadraticModel::new(vec![1.0, 2.0], h, vec![0.0, 0.0], &r, 0).unwrap();
        let s = sparsa_solve(&m, 50).unwrap();
        // H^{-1} g = (1/11) * (3 - 2, -1 + 8)
        assert!((s.d[0] + 1.0 / 11.0).abs() < 1e-6 && (s.d[1] + 7.0 / 11.0).abs() < 1e-6);
    }

    #[test]
    fn eta_bounds() {
        let r = SeparableRegularizer::uniform(RegKind::L1, 0.1, 1).unwrap();
        let h = Metric::dense(2, vec![4.0, 1.0, 1.0, 3.0], Floor::Add(0.0)).unwrap();
        let m = QuadraticModel::new(vec![1.0, 2.0], h, vec![0.0, 0.0], &r, 0).unwrap();
        assert_eq!(certify_eta(&m, &[0.0, 0.0], 1000).unwrap(), 1.0);
        let exact = sparsa_solve(&m, 1000).unwrap();
        assert!(certify_eta(&m, &exact.d, 1000).unwrap() <= 1e-8);
    }
}
