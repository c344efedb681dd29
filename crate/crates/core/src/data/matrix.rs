use std::ops::Range;

use crate::data::BlockPartition;
use crate::error::{invalid, Result};
use crate::scalar::Scalar;

/// Column-compressed sparse matrix `A` (`rows x cols`) with a block partition over its columns.
///
/// Block `i` of the partition is the column submatrix `A_i`; it is never materialized, only
/// addressed through the column range of the partition.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockedSparseMatrix<T> {
    rows: usize,
    cols: usize,
    col_ptr: Vec<usize>,
    row_idx: Vec<usize>,
    values: Vec<T>,
    partition: BlockPartition,
}

impl<T: Scalar> BlockedSparseMatrix<T> {
    pub fn from_csc(
        rows: usize,
        cols: usize,
        col_ptr: Vec<usize>,
        row_idx: Vec<usize>,
        values: Vec<T>,
        partition: BlockPartition,
    ) -> Result<Self> {
        if col_ptr.len() != cols + 1 || col_ptr[0] != 0 {
            return Err(invalid("column pointer has wrong shape"));
        }
        if *col_ptr.last().unwrap() != row_idx.len() || row_idx.len() != values.len() {
            return Err(invalid("index/value arrays disagree with column pointer"));
        }
        if partition.dim() != cols {
            return Err(invalid(format!(
                "partition covers {} coordinates but matrix has {cols} columns",
                partition.dim()
            )));
        }
        for j in 0..cols {
            if col_ptr[j + 1] < col_ptr[j] {
                return Err(invalid("column pointer not monotone"));
            }
            let idx = &row_idx[col_ptr[j]..col_ptr[j + 1]];
            if idx.iter().any(|&r| r >= rows) {
                return Err(invalid(format!("column {j} has a row index out of range")));
            }
            if idx.windows(2).any(|w| w[1] <= w[0]) {
                return Err(invalid(format!(
                    "column {j} row indices not strictly increasing"
                )));
            }
        }
        Ok(Self {
            rows,
            cols,
            col_ptr,
            row_idx,
            values,
            partition,
        })
    }

    /// Builds the matrix from per-row `(column, value)` lists with scalar (size-1) blocks.
    /// Columns within each row must be strictly increasing.
    pub fn from_row_lists(rows: &[Vec<(usize, T)>], cols: usize) -> Result<Self> {
        let mut counts = vec![0usize; cols + 1];
        for row in rows {
            for &(c, _) in row {
                if c >= cols {
                    return Err(invalid(format!(
                        "column index {c} out of range for {cols} columns"
                    )));
                }
                counts[c + 1] += 1;
            }
        }
        for j in 0..cols {
            counts[j + 1] += counts[j];
        }
        let col_ptr = counts.clone();
        let nnz = col_ptr[cols];
        let mut next = counts;
        let mut row_idx = vec![0usize; nnz];
        let mut values = vec![T::zero(); nnz];
        // rows visited in order, so each column receives increasing row indices
        for (r, row) in rows.iter().enumerate() {
            for &(c, v) in row {
                let slot = next[c];
                row_idx[slot] = r;
                values[slot] = v;
                next[c] += 1;
            }
        }
        let partition = if cols == 0 {
            BlockPartition::empty()
        } else {
            BlockPartition::uniform(cols, 1)?
        };
        Ok(Self {
            rows: rows.len(),
            cols,
            col_ptr,
            row_idx,
            values,
            partition,
        })
    }

    /// Builds from a dense row-major array, dropping exact zeros.
    pub fn from_dense(
        rows: usize,
        cols: usize,
        data: &[T],
        partition: BlockPartition,
    ) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(invalid("dense data has wrong length"));
        }
        let mut col_ptr = Vec::with_capacity(cols + 1);
        let mut row_idx = Vec::new();
        let mut values = Vec::new();
        col_ptr.push(0);
        for c in 0..cols {
            for r in 0..rows {
                let v = data[r * cols + c];
                if v != T::zero() {
                    row_idx.push(r);
                    values.push(v);
                }
            }
            col_ptr.push(row_idx.len());
        }
        Self::from_csc(rows, cols, col_ptr, row_idx, values, partition)
    }

    pub fn with_partition(mut self, partition: BlockPartition) -> Result<Self> {
        if partition.dim() != self.cols {
            return Err(invalid(format!(
                "partition covers {} coordinates but matrix has {} columns",
                partition.dim(),
                self.cols
            )));
        }
        self.partition = partition;
        Ok(self)
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn partition(&self) -> &BlockPartition {
        &self.partition
    }

    #[inline]
    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    #[inline]
    pub fn column(&self, j: usize) -> (&[usize], &[T]) {
        let r = self.col_ptr[j]..self.col_ptr[j + 1];
        (&self.row_idx[r.clone()], &self.values[r])
    }

    #[inline]
    pub fn block_columns(&self, i: usize) -> Range<usize> {
        self.partition.range(i)
    }

    pub fn block_nnz(&self, i: usize) -> usize {
        let r = self.partition.range(i);
        self.col_ptr[r.end] - self.col_ptr[r.start]
    }

    pub fn col_norm_sq(&self, j: usize) -> T {
        self.column(j).1.iter().map(|&v| v * v).sum()
    }

    /// `out += alpha * A_i d` for a block-local vector `d`.
    pub fn block_matvec_add(&self, i: usize, d: &[T], alpha: T, out: &mut [T]) {
        let cols = self.partition.range(i);
        debug_assert_eq!(d.len(), cols.len());
        for (local, j) in cols.enumerate() {
            let dj = d[local];
            if dj == T::zero() {
                continue;
            }
            let s = alpha * dj;
            let (idx, val) = self.column(j);
            for (&r, &v) in idx.iter().zip(val) {
                out[r] += s * v;
            }
        }
    }

    /// `A_i^T v` for a full-length row vector `v`.
    pub fn block_tmatvec(&self, i: usize, v: &[T]) -> Vec<T> {
        self.partition
            .range(i)
            .map(|j| {
                let (idx, val) = self.column(j);
                idx.iter()
                    .zip(val)
                    .fold(T::zero(), |acc, (&r, &a)| acc + a * v[r])
            })
            .collect()
    }

    pub fn matvec(&self, x: &[T]) -> Vec<T> {
        assert_eq!(x.len(), self.cols);
        let mut out = vec![T::zero(); self.rows];
        for (j, &xj) in x.iter().enumerate() {
            if xj == T::zero() {
                continue;
            }
            let (idx, val) = self.column(j);
            for (&r, &v) in idx.iter().zip(val) {
                out[r] += v * xj;
            }
        }
        out
    }

    pub fn tmatvec(&self, v: &[T]) -> Vec<T> {
        assert_eq!(v.len(), self.rows);
        (0..self.cols)
            .map(|j| {
                let (idx, val) = self.column(j);
                idx.iter()
                    .zip(val)
                    .fold(T::zero(), |acc, (&r, &a)| acc + a * v[r])
            })
            .collect()
    }

    /// Row-major dense copy. Test and oracle use only.
    pub fn to_dense(&self) -> Vec<T> {
        let mut out = vec![T::zero(); self.rows * self.cols];
        for j in 0..self.cols {
            let (idx, val) = self.column(j);
            for (&r, &v) in idx.iter().zip(val) {
                out[r * self.cols + j] = v;
            }
        }
        out
    }

    /// Per-row `(column, value)` lists, columns increasing.
    pub fn row_lists(&self) -> Vec<Vec<(usize, T)>> {
        let mut rows = vec![Vec::new(); self.rows];
        for j in 0..self.cols {
            let (idx, val) = self.column(j);
            for (&r, &v) in idx.iter().zip(val) {
                rows[r].push((j, v));
            }
        }
        rows
    }
}
