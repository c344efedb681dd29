use crate::error::{invalid, Error, Result};
use crate::problems::{CompositeProblem, SolverState};
use crate::scalar::Scalar;

/// Multiple of the rounding-error scale below which the decrease test is not trusted.
const NOISE_FACTOR: f64 = 16.0;

/// Armijo backtracking parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LineSearchParams<T> {
    pub beta: T,
    pub gamma: T,
    pub max_backtracks: usize,
}

impl<T: Scalar> Default for LineSearchParams<T> {
    fn default() -> Self {
        Self {
            beta: T::lit(0.5),
            gamma: T::lit(1e-4),
            max_backtracks: 100,
        }
    }
}

impl<T: Scalar> LineSearchParams<T> {
    pub fn validate(&self) -> Result<()> {
        let inside = |v: T| v > T::zero() && v < T::one();
        if !inside(self.beta) || !inside(self.gamma) {
            return Err(invalid("line search needs beta and gamma in (0, 1)"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LineSearchOutcome<T> {
    pub alpha: T,
    /// Exact `F(x + alpha U_i d) - F(x)`.
    pub change: T,
    /// Objective evaluations performed.
    pub trials: usize,
}

/// Largest `alpha` in `{1, beta, beta^2, ...}` with `F(x + alpha U_i d) <= F(x) + alpha gamma Delta`.
/// `ad` is `A_i d` on the block's rows, so each trial touches only those rows.
///
/// Returns `None` when the sufficient-decrease test sits below the rounding level of the trial
/// objective and the trial does not decrease `F`; the caller should leave `x` unchanged. When the
/// test is unresolvable but the trial does not increase `F`, the step is accepted.
pub fn line_search<T: Scalar>(
    problem: &CompositeProblem<T>,
    state: &SolverState<T>,
    i: usize,
    d: &[T],
    ad: &[T],
    delta: T,
    params: &LineSearchParams<T>,
) -> Result<Option<LineSearchOutcome<T>>> {
    if !(delta < T::zero()) {
        return Err(Error::LineSearch {
            backtracks: 0,
            delta: delta.to_f64_lossy(),
        });
    }
    let slack = T::lit(NOISE_FACTOR);
    let mut alpha = T::one();
    for trial in 0..=params.max_backtracks {
        let (change, noise) = problem.trial_change_with_noise(state, i, d, ad, alpha);
        if !change.is_finite() {
            return Err(Error::NonFinite("trial objective"));
        }
        let target = alpha * params.gamma * delta;
        if change <= target {
            return Ok(Some(LineSearchOutcome {
                alpha,
                change,
                trials: trial + 1,
            }));
        }
        if -target <= slack * noise {
            return Ok((change <= T::zero()).then_some(LineSearchOutcome {
                alpha,
                change,
                trials: trial + 1,
            }));
        }
        alpha *= params.beta;
    }
    Err(Error::LineSearch {
        backtracks: params.max_backtracks,
        delta: delta.to_f64_lossy(),
    })
}

/// Guaranteed step `min{1, 2 beta (1 - gamma) m / (L (1 + sqrt(eta)))}`.
pub fn step_lower_bound<T: Scalar>(m: T, lipschitz: T, eta: T, params: &LineSearchParams<T>) -> T {
    let two = T::lit(2.0);
    (two * params.beta * (T::one() - params.gamma) * m / (lipschitz * (T::one() + eta.sqrt())))
        .min(T::one())
}
