use crate::error::{invalid, Result};
use crate::linalg::{power_iteration, start_vector, symmetric_eigenvalues};
use crate::problems::HessianBlock;
use crate::scalar::{dot, Scalar};

/// How a dense metric is made positive definite.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Floor<T> {
    /// Always add `eps * I`.
    Add(T),
    /// Add the smallest multiple of `I` that lifts the smallest eigenvalue to `eps`.
    RaiseTo(T),
}

#[derive(Debug)]
enum Op<'a, T> {
    Identity(T),
    Dense(Vec<T>),
    Operator { hess: HessianBlock<'a, T>, shift: T },
}

/// Symmetric positive definite block metric `H` with recorded bounds `m I <= H <= M I`.
#[derive(Debug)]
pub struct Metric<'a, T> {
    op: Op<'a, T>,
    n: usize,
    m: T,
    big_m: T,
}

impl<'a, T: Scalar> Metric<'a, T> {
    /// `c I`.
    pub fn scaled_identity(n: usize, c: T) -> Result<Self> {
        if !(c > T::zero() && c.is_finite()) {
            return Err(invalid(format!("identity scale must be positive, got {c}")));
        }
        Ok(Self {
            op: Op::Identity(c),
            n,
            m: c,
            big_m: c,
        })
    }

    /// Dense row-major symmetric matrix, floored to be positive definite.
    pub fn dense(n: usize, mut matrix: Vec<T>, floor: Floor<T>) -> Result<Self> {
        if matrix.len() != n * n {
            return Err(invalid("dense metric has wrong size"));
        }
        if matrix.iter().any(|v| !v.is_finite()) {
            return Err(crate::error::Error::NonFinite("metric"));
        }
        let eig = symmetric_eigenvalues(n, &matrix);
        let (lo, hi) = (eig[0], eig[n - 1]);
        let shift = match floor {
            Floor::Add(eps) => eps,
            Floor::RaiseTo(eps) => (eps - lo).max(T::zero()),
        };
        for k in 0..n {
            matrix[k * n + k] += shift;
        }
        let m = lo + shift;
        if !(m > T::zero()) {
            return Err(invalid(format!(
                "metric floor left smallest eigenvalue at {m}"
            )));
        }
        Ok(Self {
            op: Op::Dense(matrix),
            n,
            m,
            big_m: hi + shift,
        })
    }

    /// Dense matrix with bounds computed elsewhere.
    pub(crate) fn dense_with_bounds(n: usize, matrix: Vec<T>, m: T, big_m: T) -> Self {
        Self {
            op: Op::Dense(matrix),
            n,
            m,
            big_m,
        }
    }

    /// Matrix-free `hess + shift I`; bounds are `shift` and `trace(hess) + shift`.
    pub fn operator(hess: HessianBlock<'a, T>, shift: T) -> Result<Self> {
        if !(shift > T::zero()) {
            return Err(invalid("operator metric needs a positive shift"));
        }
        let n = hess.size();
        let big_m = hess.trace() + shift;
        Ok(Self {
            op: Op::Operator { hess, shift },
            n,
            m: shift,
            big_m,
        })
    }

    pub fn size(&self) -> usize {
        self.n
    }

    /// Lower eigenvalue bound `m_i`.
    pub fn m(&self) -> T {
        self.m
    }

    /// Upper eigenvalue bound `M_i`.
    pub fn big_m(&self) -> T {
        self.big_m
    }

    pub fn as_scaled_identity(&self) -> Option<T> {
        match self.op {
            Op::Identity(c) => Some(c),
            _ => None,
        }
    }

    /// Row-major dense copy, if stored densely or as a scaled identity.
    pub fn to_dense(&self) -> Option<Vec<T>> {
        match &self.op {
            Op::Identity(c) => {
                let mut out = vec![T::zero(); self.n * self.n];
                (0..self.n).for_each(|k| out[k * self.n + k] = *c);
                Some(out)
            }
            Op::Dense(m) => Some(m.clone()),
            Op::Operator { .. } => None,
        }
    }

    pub fn apply(&self, v: &[T], out: &mut [T]) {
        match &self.op {
            Op::Identity(c) => out.iter_mut().zip(v).for_each(|(o, &x)| *o = *c * x),
            Op::Dense(m) => {
                for (r, o) in out.iter_mut().enumerate() {
                    *o = dot(&m[r * self.n..(r + 1) * self.n], v);
                }
            }
            Op::Operator { hess, shift } => {
                hess.apply(v, out);
                out.iter_mut().zip(v).for_each(|(o, &x)| *o += *shift * x);
            }
        }
    }

    /// `v^T H v`.
    pub fn quad(&self, v: &[T]) -> T {
        let mut hv = vec![T::zero(); self.n];
        self.apply(v, &mut hv);
        dot(v, &hv)
    }

    /// Five-step power estimate of `||H||` (exact for scaled identities).
    pub fn norm_estimate(&self) -> T {
        match self.op {
            Op::Identity(c) => c,
            _ => power_iteration(
                |v, out| self.apply(v, out),
                start_vector(self.n),
                T::zero(),
                5,
            ),
        }
    }
}
