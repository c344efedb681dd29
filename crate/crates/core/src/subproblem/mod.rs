//! Per-block regularized quadratic models and their exact or inexact solution.

mod metric;
mod sparsa;

pub use metric::{Floor, Metric};
pub use sparsa::{certify_eta, sparsa_solve, REFERENCE_BUDGET};

use crate::error::{invalid, Error, Result};
use crate::problems::{soft_threshold, RegKind, SeparableRegularizer};
use crate::scalar::{dot, norm, Scalar};

/// `Q(d) = g^T d + 1/2 d^T H d + psi_i(x_i + d) - psi_i(x_i)` for one block.
#[derive(Debug)]
pub struct QuadraticModel<'a, T> {
    grad: Vec<T>,
    metric: Metric<'a, T>,
    x: Vec<T>,
    reg: &'a SeparableRegularizer<T>,
    block: usize,
}

/// A subproblem step with its model value and `Delta`.
#[derive(Debug, Clone, PartialEq)]
pub struct SubproblemSolution<T> {
    pub d: Vec<T>,
    pub q_value: T,
    pub delta: T,
    pub inner_iterations: usize,
}

impl<'a, T: Scalar> QuadraticModel<'a, T> {
    pub fn new(
        grad: Vec<T>,
        metric: Metric<'a, T>,
        x: Vec<T>,
        reg: &'a SeparableRegularizer<T>,
        block: usize,
    ) -> Result<Self> {
        let n = metric.size();
        if grad.len() != n || x.len() != n {
            return Err(invalid(format!(
                "model sizes disagree: grad {}, x {}, metric {n}",
                grad.len(),
                x.len()
            )));
        }
        if block >= reg.weights().len() {
            return Err(invalid("model block out of range"));
        }
        Ok(Self {
            grad,
            metric,
            x,
            reg,
            block,
        })
    }

    pub fn grad(&self) -> &[T] {
        &self.grad
    }

    pub fn metric(&self) -> &Metric<'a, T> {
        &self.metric
    }

    pub fn x(&self) -> &[T] {
        &self.x
    }

    pub fn size(&self) -> usize {
        self.grad.len()
    }

    pub fn lambda(&self) -> T {
        self.reg.weight(self.block)
    }

    pub fn reg_kind(&self) -> RegKind {
        self.reg.kind()
    }

    /// `psi_i(x_i + d) - psi_i(x_i)`.
    pub fn psi_change(&self, d: &[T]) -> T {
        self.reg.block_change(self.block, &self.x, d)
    }

    /// Step `d` with `x + d = prox_{t psi_i}(v)`.
    pub(crate) fn prox_step(&self, mut v: Vec<T>, t: T) -> Vec<T> {
        self.reg.prox_block(self.block, &mut v, t);
        v.iter_mut().zip(&self.x).for_each(|(u, &x)| *u -= x);
        v
    }

    fn solution(&self, d: Vec<T>, inner_iterations: usize) -> SubproblemSolution<T> {
        let delta = delta_eval(self, &d);
        let q_value = delta + T::lit(0.5) * self.metric.quad(&d);
        SubproblemSolution {
            d,
            q_value,
            delta,
            inner_iterations,
        }
    }
}

pub fn q_eval<T: Scalar>(model: &QuadraticModel<'_, T>, d: &[T]) -> T {
    delta_eval(model, d) + T::lit(0.5) * model.metric.quad(d)
}

/// `Delta = g^T d + psi_i(x_i + d) - psi_i(x_i)`.
pub fn delta_eval<T: Scalar>(model: &QuadraticModel<'_, T>, d: &[T]) -> T {
    dot(&model.grad, d) + model.psi_change(d)
}

/// Exact minimizer for a scaled-identity metric, any supported regularizer.
pub fn closed_form<T: Scalar>(model: &QuadraticModel<'_, T>) -> Result<SubproblemSolution<T>> {
    let c = model
        .metric
        .as_scaled_identity()
        .ok_or_else(|| Error::Unsupported("closed form needs a scaled-identity metric".into()))?;
    let v: Vec<T> = model
        .x
        .iter()
        .zip(&model.grad)
        .map(|(&x, &g)| x - g / c)
        .collect();
    let d = model.prox_step(v, T::one() / c);
    Ok(model.solution(d, 0))
}

/// Soft-threshold solution `x + d = S(x - g/c, lambda/c)`.
pub fn prox_identity_l1<T: Scalar>(model: &QuadraticModel<'_, T>) -> Result<SubproblemSolution<T>> {
    let c = model
        .metric
        .as_scaled_identity()
        .ok_or_else(|| Error::Unsupported("closed form needs a scaled-identity metric".into()))?;
    if !matches!(model.reg_kind(), RegKind::L1 | RegKind::Zero) {
        return Err(Error::Unsupported("l1 prox on a non-l1 model".into()));
    }
    let thr = model.lambda() / c;
    let d = model
        .x
        .iter()
        .zip(&model.grad)
        .map(|(&x, &g)| soft_threshold(x - g / c, thr) - x)
        .collect();
    Ok(model.solution(d, 0))
}

/// Block soft-threshold solution `x + d = max(0, 1 - (lambda/c)/||v||) v` with `v = x - g/c`.
pub fn prox_identity_group<T: Scalar>(
    model: &QuadraticModel<'_, T>,
) -> Result<SubproblemSolution<T>> {
    let c = model
        .metric
        .as_scaled_identity()
        .ok_or_else(|| Error::Unsupported("closed form needs a scaled-identity metric".into()))?;
    if !matches!(model.reg_kind(), RegKind::GroupL2 | RegKind::Zero) {
        return Err(Error::Unsupported("group prox on a non-group model".into()));
    }
    let v: Vec<T> = model
        .x
        .iter()
        .zip(&model.grad)
        .map(|(&x, &g)| x - g / c)
        .collect();
    let nv = norm(&v);
    let thr = model.lambda() / c;
    let scale = if nv > thr {
        T::one() - thr / nv
    } else {
        T::zero()
    };
    let d = v
        .iter()
        .zip(&model.x)
        .map(|(&vi, &x)| scale * vi - x)
        .collect();
    Ok(model.solution(d, 0))
}
