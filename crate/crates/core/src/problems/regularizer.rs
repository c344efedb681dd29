use crate::data::BlockPartition;
use crate::error::{invalid, Error, Result};
use crate::scalar::{compensated_sum, norm, Scalar};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RegKind {
    /// `lambda_i * ||x_i||_1`
    L1,
    /// `lambda_i * ||x_i||_2`
    GroupL2,
    Zero,
}

impl RegKind {
    pub fn name(self) -> &'static str {
        match self {
            RegKind::L1 => "l1",
            RegKind::GroupL2 => "group-l2",
            RegKind::Zero => "zero",
        }
    }
}

impl std::str::FromStr for RegKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "l1" => Ok(RegKind::L1),
            "group-l2" | "group_l2" | "group" => Ok(RegKind::GroupL2),
            "zero" | "none" => Ok(RegKind::Zero),
            _ => Err(Error::Config(format!("unknown regularizer '{s}'"))),
        }
    }
}

/// Block-separable regularizer `psi(x) = sum_i psi_i(x_i)` with one weight per block.
#[derive(Debug, Clone, PartialEq)]
pub struct SeparableRegularizer<T> {
    kind: RegKind,
    weights: Vec<T>,
}

impl<T: Scalar> SeparableRegularizer<T> {
    pub fn new(kind: RegKind, weights: Vec<T>) -> Result<Self> {
        if let Some(w) = weights
            .iter()
            .find(|w| !(**w >= T::zero()) || !w.is_finite())
        {
            return Err(invalid(format!(
                "regularizer weights must be finite and >= 0, got {w}"
            )));
        }
        Ok(Self { kind, weights })
    }

    pub fn uniform(kind: RegKind, lambda: T, blocks: usize) -> Result<Self> {
        Self::new(kind, vec![lambda; blocks])
    }

    pub fn zero(blocks: usize) -> Self {
        Self {
            kind: RegKind::Zero,
            weights: vec![T::zero(); blocks],
        }
    }

    pub fn kind(&self) -> RegKind {
        self.kind
    }

    pub fn weights(&self) -> &[T] {
        &self.weights
    }

    pub fn weight(&self, i: usize) -> T {
        self.weights[i]
    }

    pub fn block_value(&self, i: usize, xi: &[T]) -> T {
        let w = self.weights[i];
        match self.kind {
            RegKind::L1 => w * xi.iter().map(|v| v.abs()).sum::<T>(),
            RegKind::GroupL2 => w * norm(xi),
            RegKind::Zero => T::zero(),
        }
    }

    pub fn value(&self, partition: &BlockPartition, x: &[T]) -> T {
        compensated_sum(
            (0..partition.num_blocks()).map(|i| self.block_value(i, &x[partition.range(i)])),
        )
    }

    /// `psi_i(x_i + step) - psi_i(x_i)` without cancellation for small steps.
    pub fn block_change(&self, i: usize, xi: &[T], step: &[T]) -> T {
        let w = self.weights[i];
        match self.kind {
            RegKind::Zero => T::zero(),
            RegKind::L1 => {
                let s: T = xi
                    .iter()
                    .zip(step)
                    .map(|(&x, &h)| {
                        let y = x + h;
                        if x > T::zero() && y >= T::zero() {
                            h
                        } else if x < T::zero() && y <= T::zero() {
                            -h
                        } else {
                            y.abs() - x.abs()
                        }
                    })
                    .sum();
                w * s
            }
            RegKind::GroupL2 => {
                let moved: Vec<T> = xi.iter().zip(step).map(|(&x, &h)| x + h).collect();
                let (n0, n1) = (norm(xi), norm(&moved));
                if n0 + n1 == T::zero() {
                    return T::zero();
                }
                // (||x+h||^2 - ||x||^2) / (||x+h|| + ||x||)
                let num: T = xi.iter().zip(step).map(|(&x, &h)| h * (x + x + h)).sum();
                w * num / (n0 + n1)
            }
        }
    }

    /// Scale of the rounding error in [`block_change`](Self::block_change).
    pub fn block_change_noise(&self, i: usize, xi: &[T], step: &[T]) -> T {
        let w = self.weights[i];
        match self.kind {
            RegKind::Zero => T::zero(),
            RegKind::L1 => {
                w * xi
                    .iter()
                    .zip(step)
                    .filter(|(&x, &h)| (x > T::zero()) != (x + h > T::zero()) || x == T::zero())
                    .map(|(&x, &h)| x.abs() + (x + h).abs())
                    .sum::<T>()
            }
            RegKind::GroupL2 => {
                w * xi
                    .iter()
                    .zip(step)
                    .map(|(&x, &h)| h.abs() * (x.abs() + h.abs()))
                    .sum::<T>()
                    / (norm(xi) + T::min_positive_value())
            }
        }
    }

    /// Overwrites `v` with `argmin_u  t psi_i(u) + 1/2 ||u - v||^2`.
    pub fn prox_block(&self, i: usize, v: &mut [T], t: T) {
        let thr = t * self.weights[i];
        match self.kind {
            RegKind::Zero => {}
            RegKind::L1 => {
                for u in v.iter_mut() {
                    *u = soft_threshold(*u, thr);
                }
            }
            RegKind::GroupL2 => {
                let nv = norm(v);
                let scale = if nv > thr {
                    T::one() - thr / nv
                } else {
                    T::zero()
                };
                for u in v.iter_mut() {
                    *u *= scale;
                }
            }
        }
    }
}

#[inline]
pub fn soft_threshold<T: Scalar>(v: T, thr: T) -> T {
    if v > thr {
        v - thr
    } else if v < -thr {
        v + thr
    } else {
        T::zero()
    }
}
