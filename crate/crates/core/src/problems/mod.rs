//! Losses, regularizers and the composite objective `F(x) = g(Ax) + psi(x)`.

mod loss;
mod problem;
mod regularizer;

pub use loss::{LossKind, SeparableLoss};
pub use problem::{BlockRows, CompositeProblem, HessianBlock, SolverState, DENSE_BLOCK_LIMIT};
pub use regularizer::{soft_threshold, RegKind, SeparableRegularizer};
