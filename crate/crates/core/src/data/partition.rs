use std::ops::Range;

use crate::error::{invalid, Result};

/// Contiguous block partition of `0..n`, stored as `N + 1` monotone offsets.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BlockPartition {
    offsets: Vec<usize>,
}

impl BlockPartition {
    pub fn from_offsets(offsets: Vec<usize>) -> Result<Self> {
        if offsets.len() < 2 {
            return Err(invalid("partition needs at least one block"));
        }
        if offsets[0] != 0 {
            return Err(invalid("partition offsets must start at 0"));
        }
        if offsets.windows(2).any(|w| w[1] <= w[0]) {
            return Err(invalid("partition blocks must be nonempty and increasing"));
        }
        Ok(Self { offsets })
    }

    /// Consecutive blocks of `block_size` coordinates; the last block keeps the remainder.
    pub fn uniform(n: usize, block_size: usize) -> Result<Self> {
        if n == 0 || block_size == 0 {
            return Err(invalid(format!(
                "partition requires n >= 1 and block size >= 1 (got n={n}, size={block_size})"
            )));
        }
        let mut offsets: Vec<usize> = (0..n).step_by(block_size).collect();
        offsets.push(n);
        Ok(Self { offsets })
    }

    pub fn from_sizes(sizes: &[usize]) -> Result<Self> {
        let mut offsets = Vec::with_capacity(sizes.len() + 1);
        offsets.push(0);
        for &s in sizes {
            offsets.push(offsets.last().unwrap() + s);
        }
        Self::from_offsets(offsets)
    }

    /// Degenerate partition used for matrices with no columns.
    pub(crate) fn empty() -> Self {
        Self { offsets: vec![0] }
    }

    #[inline]
    pub fn num_blocks(&self) -> usize {
        self.offsets.len() - 1
    }

    #[inline]
    pub fn dim(&self) -> usize {
        *self.offsets.last().unwrap()
    }

    #[inline]
    pub fn range(&self, i: usize) -> Range<usize> {
        self.offsets[i]..self.offsets[i + 1]
    }

    #[inline]
    pub fn block_size(&self, i: usize) -> usize {
        self.offsets[i + 1] - self.offsets[i]
    }

    pub fn offsets(&self) -> &[usize] {
        &self.offsets
    }

    pub fn sizes(&self) -> impl Iterator<Item = usize> + '_ {
        self.offsets.windows(2).map(|w| w[1] - w[0])
    }

    pub fn max_block_size(&self) -> usize {
        self.sizes().max().unwrap_or(0)
    }
}
