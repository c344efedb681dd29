use std::sync::OnceLock;

use crate::data::{BlockPartition, BlockedSparseMatrix, Dataset};
use crate::error::{invalid, Error, Result};
use crate::linalg::{power_iteration, start_vector, symmetric_eigenvalues};
use crate::problems::{LossKind, SeparableLoss, SeparableRegularizer};
use crate::scalar::{compensated_sum, dot, norm_inf, Scalar};

/// Blocks at most this wide get dense Gram/Hessian treatment.
pub const DENSE_BLOCK_LIMIT: usize = 64;
pub(crate) const POWER_TOL: f64 = 1e-10;
pub(crate) const POWER_MAX_ITER: usize = 1000;
pub(crate) const LIPSCHITZ_INFLATION: f64 = 1e-8;
pub(crate) const LIPSCHITZ_FLOOR: f64 = 1e-12;

/// Rows touched by one block, with each stored entry mapped to its position in `rows`.
#[derive(Debug, Clone)]
pub struct BlockRows {
    rows: Vec<usize>,
    starts: Vec<usize>,
    local: Vec<usize>,
}

impl BlockRows {
    fn build<T: Scalar>(a: &BlockedSparseMatrix<T>, i: usize) -> Self {
        let cols = a.block_columns(i);
        let mut rows: Vec<usize> = cols
            .clone()
            .flat_map(|j| a.column(j).0.iter().copied())
            .collect();
        rows.sort_unstable();
        rows.dedup();
        let mut starts = vec![0];
        let mut local = Vec::with_capacity(a.block_nnz(i));
        for j in cols {
            for r in a.column(j).0 {
                local.push(rows.binary_search(r).expect("row collected above"));
            }
            starts.push(local.len());
        }
        Self {
            rows,
            starts,
            local,
        }
    }

    /// Global indices of the rows with a nonzero in the block, increasing.
    pub fn rows(&self) -> &[usize] {
        &self.rows
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// Local row positions of the stored entries of the block's `k`-th column.
    #[inline]
    pub fn column_local(&self, k: usize) -> &[usize] {
        &self.local[self.starts[k]..self.starts[k + 1]]
    }
}

/// `F(x) = g(Ax) + sum_i psi_i(x_i)`.
#[derive(Debug)]
pub struct CompositeProblem<T> {
    dataset: Dataset<T>,
    loss: SeparableLoss<T>,
    reg: SeparableRegularizer<T>,
    lipschitz: OnceLock<Vec<T>>,
    block_rows: OnceLock<Vec<BlockRows>>,
}

impl<T: Scalar> CompositeProblem<T> {
    pub fn new(
        dataset: Dataset<T>,
        loss: LossKind,
        c: T,
        reg: SeparableRegularizer<T>,
    ) -> Result<Self> {
        let blocks = dataset.partition().num_blocks();
        if reg.weights().len() != blocks {
            return Err(invalid(format!(
                "{} regularizer weights for {blocks} blocks",
                reg.weights().len()
            )));
        }
        let loss = SeparableLoss::new(loss, c, dataset.labels().to_vec())?;
        Ok(Self {
            dataset,
            loss,
            reg,
            lipschitz: OnceLock::new(),
            block_rows: OnceLock::new(),
        })
    }

    pub fn dataset(&self) -> &Dataset<T> {
        &self.dataset
    }

    pub fn matrix(&self) -> &BlockedSparseMatrix<T> {
        self.dataset.matrix()
    }

    pub fn partition(&self) -> &BlockPartition {
        self.dataset.partition()
    }

    pub fn loss(&self) -> &SeparableLoss<T> {
        &self.loss
    }

    pub fn reg(&self) -> &SeparableRegularizer<T> {
        &self.reg
    }

    pub fn num_blocks(&self) -> usize {
        self.partition().num_blocks()
    }

    pub fn dim(&self) -> usize {
        self.partition().dim()
    }

    pub fn is_convex(&self) -> bool {
        self.loss.kind().is_convex()
    }

    pub fn block_rows(&self, i: usize) -> &BlockRows {
        &self.block_rows.get_or_init(|| {
            let a = self.matrix();
            (0..a.partition().num_blocks())
                .map(|i| BlockRows::build(a, i))
                .collect()
        })[i]
    }

    /// Blockwise Lipschitz constants, computed on first use.
    pub fn lipschitz(&self) -> &[T] {
        self.lipschitz.get_or_init(|| {
            (0..self.num_blocks())
                .map(|i| self.block_lipschitz(i))
                .collect()
        })
    }

    pub fn l_max(&self) -> T {
        self.lipschitz().iter().copied().fold(T::zero(), T::max)
    }

    pub fn l_min(&self) -> T {
        self.lipschitz().iter().copied().fold(T::infinity(), T::min)
    }

    pub fn l_avg(&self) -> T {
        compensated_sum(self.lipschitz().iter().copied()) / T::from_usize_lossy(self.num_blocks())
    }

    /// `L_i = kappa * sigma_max(A_i)^2`, never an underestimate.
    pub fn block_lipschitz(&self, i: usize) -> T {
        let a = self.matrix();
        let cols = a.block_columns(i);
        let kappa = self.loss.curvature_bound();
        let inflate = T::one() + T::lit(LIPSCHITZ_INFLATION);
        let sigma_sq = if cols.len() == 1 {
            a.col_norm_sq(cols.start)
        } else if cols.len() <= DENSE_BLOCK_LIMIT {
            let gram = self.block_gram(i, None);
            symmetric_eigenvalues(cols.len(), &gram)
                .last()
                .copied()
                .unwrap_or(T::zero())
                .max(T::zero())
                * inflate
        } else {
            let br = self.block_rows(i);
            let mut scratch = vec![T::zero(); br.len()];
            power_iteration(
                |v, out| self.local_gram_apply(i, None, v, out, &mut scratch),
                start_vector(cols.len()),
                T::lit(POWER_TOL),
                POWER_MAX_ITER,
            ) * inflate
        };
        let l = kappa * sigma_sq;
        if l > T::zero() {
            l
        } else {
            log::warn!("block {i} has no nonzero entries; using Lipschitz floor");
            T::lit(LIPSCHITZ_FLOOR)
        }
    }

    /// `kappa * sigma_max(A)^2`, inflated like the blockwise constants.
    pub fn global_lipschitz(&self) -> T {
        let a = self.matrix();
        let mut tmp = vec![T::zero(); a.rows()];
        let s = power_iteration(
            |v, out| {
                tmp.iter_mut().for_each(|t| *t = T::zero());
                for (j, &vj) in v.iter().enumerate() {
                    let (idx, val) = a.column(j);
                    for (&r, &x) in idx.iter().zip(val) {
                        tmp[r] += x * vj;
                    }
                }
                let back = a.tmatvec(&tmp);
                out.copy_from_slice(&back);
            },
            start_vector(a.cols()),
            T::lit(POWER_TOL),
            POWER_MAX_ITER,
        );
        let l = self.loss.curvature_bound() * s * (T::one() + T::lit(LIPSCHITZ_INFLATION));
        l.max(T::lit(LIPSCHITZ_FLOOR))
    }

    /// Dense `A_i^T W A_i` (row-major), with `W = diag(weights)` over the block's local rows.
    pub(crate) fn block_gram(&self, i: usize, weights: Option<&[T]>) -> Vec<T> {
        let a = self.matrix();
        let cols = a.block_columns(i);
        let br = self.block_rows(i);
        let ni = cols.len();
        let mut dense = vec![T::zero(); ni * br.len()];
        for (k, j) in cols.enumerate() {
            let vals = a.column(j).1;
            for (&loc, &v) in br.column_local(k).iter().zip(vals) {
                let w = weights.map_or(T::one(), |w| w[loc]);
                dense[k * br.len() + loc] = v * w.sqrt();
            }
        }
        let mut gram = vec![T::zero(); ni * ni];
        for p in 0..ni {
            for q in p..ni {
                let s = dot(
                    &dense[p * br.len()..(p + 1) * br.len()],
                    &dense[q * br.len()..(q + 1) * br.len()],
                );
                gram[p * ni + q] = s;
                gram[q * ni + p] = s;
            }
        }
        gram
    }

    /// `out = A_i^T W A_i v` through the block's local rows.
    pub(crate) fn local_gram_apply(
        &self,
        i: usize,
        weights: Option<&[T]>,
        v: &[T],
        out: &mut [T],
        scratch: &mut [T],
    ) {
        let a = self.matrix();
        let br = self.block_rows(i);
        scratch.iter_mut().for_each(|s| *s = T::zero());
        for (k, j) in a.block_columns(i).enumerate() {
            let vk = v[k];
            if vk == T::zero() {
                continue;
            }
            for (&loc, &x) in br.column_local(k).iter().zip(a.column(j).1) {
                scratch[loc] += x * vk;
            }
        }
        if let Some(w) = weights {
            for (s, &wr) in scratch.iter_mut().zip(w) {
                *s *= wr;
            }
        }
        for (k, j) in a.block_columns(i).enumerate() {
            out[k] = br
                .column_local(k)
                .iter()
                .zip(a.column(j).1)
                .fold(T::zero(), |acc, (&loc, &x)| acc + x * scratch[loc]);
        }
    }

    /// State at `x0` with `z = A x0` and the objective computed from scratch.
    pub fn state(&self, x0: Vec<T>) -> Result<SolverState<T>> {
        if x0.len() != self.dim() {
            return Err(invalid(format!(
                "x0 has length {}, expected {}",
                x0.len(),
                self.dim()
            )));
        }
        if x0.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("initial point"));
        }
        let z = self.matrix().matvec(&x0);
        let mut s = SolverState {
            x: x0,
            z,
            objective: T::zero(),
        };
        s.objective = self.objective(&s)?;
        Ok(s)
    }

    pub fn zero_state(&self) -> SolverState<T> {
        self.state(vec![T::zero(); self.dim()])
            .expect("zero point is valid")
    }

    /// `g(z) + psi(x)` from the state's cached `z`.
    pub fn objective(&self, state: &SolverState<T>) -> Result<T> {
        Ok(self.loss.eval(&state.z)? + self.reg.value(self.partition(), &state.x))
    }

    /// `F(x)` computed from scratch.
    pub fn objective_at(&self, x: &[T]) -> Result<T> {
        let z = self.matrix().matvec(x);
        Ok(self.loss.eval(&z)? + self.reg.value(self.partition(), x))
    }

    /// `grad_i f(x) = A_i^T g'(z)`, touching only the block's stored entries.
    pub fn partial_gradient(&self, state: &SolverState<T>, i: usize) -> Vec<T> {
        let a = self.matrix();
        a.block_columns(i)
            .map(|j| {
                let (idx, val) = a.column(j);
                idx.iter().zip(val).fold(T::zero(), |acc, (&r, &v)| {
                    acc + v * self.loss.row_grad(r, state.z[r])
                })
            })
            .collect()
    }

    pub fn full_gradient(&self, state: &SolverState<T>) -> Vec<T> {
        let g: Vec<T> = state
            .z
            .iter()
            .enumerate()
            .map(|(r, &z)| self.loss.row_grad(r, z))
            .collect();
        self.matrix().tmatvec(&g)
    }

    /// Clamped-curvature Hessian block `A_i^T D A_i` at the state's `z`.
    pub fn hessian_block(&self, state: &SolverState<T>, i: usize) -> HessianBlock<'_, T> {
        let br = self.block_rows(i);
        let weights = br
            .rows()
            .iter()
            .map(|&r| self.loss.row_metric_curvature(r, state.z[r]))
            .collect();
        HessianBlock {
            problem: self,
            block: i,
            weights,
            scratch: vec![T::zero(); br.len()].into(),
        }
    }

    /// `kappa A_i^T A_i`, the global curvature bound restricted to block `i`.
    pub fn bound_hessian_block(&self, i: usize) -> HessianBlock<'_, T> {
        let br = self.block_rows(i);
        let weights = vec![self.loss.curvature_bound(); br.len()];
        HessianBlock {
            problem: self,
            block: i,
            weights,
            scratch: vec![T::zero(); br.len()].into(),
        }
    }

    pub fn hessian_block_matvec(&self, state: &SolverState<T>, i: usize, v: &[T]) -> Vec<T> {
        let h = self.hessian_block(state, i);
        let mut out = vec![T::zero(); v.len()];
        h.apply(v, &mut out);
        out
    }

    /// `A_i d` restricted to the block's local rows.
    pub fn block_direction(&self, i: usize, d: &[T]) -> Vec<T> {
        let a = self.matrix();
        let br = self.block_rows(i);
        let mut out = vec![T::zero(); br.len()];
        for (k, j) in a.block_columns(i).enumerate() {
            if d[k] == T::zero() {
                continue;
            }
            for (&loc, &x) in br.column_local(k).iter().zip(a.column(j).1) {
                out[loc] += x * d[k];
            }
        }
        out
    }

    /// Exact `F(x + alpha U_i d) - F(x)` given `ad = A_i d` on local rows.
    pub fn trial_change(&self, state: &SolverState<T>, i: usize, d: &[T], ad: &[T], alpha: T) -> T {
        self.trial_change_with_noise(state, i, d, ad, alpha).0
    }

    /// [`trial_change`](Self::trial_change) together with the scale of its rounding error.
    pub fn trial_change_with_noise(
        &self,
        state: &SolverState<T>,
        i: usize,
        d: &[T],
        ad: &[T],
        alpha: T,
    ) -> (T, T) {
        let br = self.block_rows(i);
        let mut noise = T::zero();
        let loss = compensated_sum(br.rows().iter().zip(ad).map(|(&r, &v)| {
            let (z, h) = (state.z[r], alpha * v);
            noise += self.loss.row_change_noise(r, z, h);
            self.loss.row_change(r, z, h)
        }));
        let xi = &state.x[self.partition().range(i)];
        let step: Vec<T> = d.iter().map(|&di| alpha * di).collect();
        noise += self.reg.block_change_noise(i, xi, &step);
        (
            loss + self.reg.block_change(i, xi, &step),
            noise * T::epsilon(),
        )
    }

    /// Applies `x_i += alpha d` and updates `z` and the cached objective by `change`.
    pub fn apply_step(
        &self,
        state: &mut SolverState<T>,
        i: usize,
        d: &[T],
        ad: &[T],
        alpha: T,
        change: T,
    ) {
        let range = self.partition().range(i);
        for (x, &di) in state.x[range].iter_mut().zip(d) {
            *x += alpha * di;
        }
        for (&r, &v) in self.block_rows(i).rows().iter().zip(ad) {
            state.z[r] += alpha * v;
        }
        state.objective += change;
    }

    /// Recomputes `z = Ax` from scratch. The cached objective keeps accumulating the exact step
    /// differences; it is only checked against a fresh evaluation.
    pub fn refresh(&self, state: &mut SolverState<T>) -> Result<()> {
        let z = self.matrix().matvec(&state.x);
        if cfg!(debug_assertions) && T::epsilon() < T::lit(1e-10) {
            let drift = state
                .z
                .iter()
                .zip(&z)
                .fold(T::zero(), |m, (&a, &b)| m.max((a - b).abs()));
            let tol = T::lit(1e-8) * (T::one() + norm_inf(&z));
            debug_assert!(drift <= tol, "z drifted by {drift}");
        }
        state.z = z;
        let fresh = self.objective(state)?;
        if !fresh.is_finite() {
            return Err(Error::NonFinite("objective"));
        }
        let gap = (fresh - state.objective).abs();
        if gap > T::lit(1e-10) * (T::one() + fresh.abs()) {
            log::warn!("cached objective off by {gap:e}; resetting");
            state.objective = fresh;
        }
        Ok(())
    }
}

/// Iterate `x` with cached `z = Ax` and objective.
#[derive(Debug, Clone, PartialEq)]
pub struct SolverState<T> {
    x: Vec<T>,
    z: Vec<T>,
    objective: T,
}

impl<T: Scalar> SolverState<T> {
    pub fn x(&self) -> &[T] {
        &self.x
    }

    pub fn z(&self) -> &[T] {
        &self.z
    }

    pub fn objective(&self) -> T {
        self.objective
    }

    pub fn into_x(self) -> Vec<T> {
        self.x
    }
}

/// Matrix-free `A_i^T D A_i` with `D` the clamped loss curvature.
#[derive(Debug)]
pub struct HessianBlock<'a, T> {
    problem: &'a CompositeProblem<T>,
    block: usize,
    weights: Vec<T>,
    scratch: std::cell::RefCell<Vec<T>>,
}

impl<T: Scalar> HessianBlock<'_, T> {
    pub fn size(&self) -> usize {
        self.problem.partition().block_size(self.block)
    }

    pub fn apply(&self, v: &[T], out: &mut [T]) {
        let mut scratch = self.scratch.borrow_mut();
        self.problem
            .local_gram_apply(self.block, Some(&self.weights), v, out, &mut scratch);
    }

    pub fn dense(&self) -> Vec<T> {
        self.problem.block_gram(self.block, Some(&self.weights))
    }

    /// `trace(A_i^T D A_i)`, an upper bound on the largest eigenvalue.
    pub fn trace(&self) -> T {
        let a = self.problem.matrix();
        let br = self.problem.block_rows(self.block);
        a.block_columns(self.block)
            .enumerate()
            .map(|(k, j)| {
                br.column_local(k)
                    .iter()
                    .zip(a.column(j).1)
                    .fold(T::zero(), |acc, (&loc, &x)| acc + self.weights[loc] * x * x)
            })
            .sum()
    }
}
