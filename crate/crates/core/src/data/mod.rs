//! Sparse data storage, LIBSVM ingestion and synthetic problem generation.

mod libsvm;
mod matrix;
mod partition;
mod synth;

pub use libsvm::{parse_libsvm, write_libsvm};
pub use matrix::BlockedSparseMatrix;
pub use partition::BlockPartition;
pub use synth::{generate, synth_regression, two_level_profile, LabelKind, SynthSpec};

use crate::error::{invalid, Result};
use crate::scalar::Scalar;

/// Design matrix with one label per row.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset<T> {
    matrix: BlockedSparseMatrix<T>,
    labels: Vec<T>,
}

impl<T: Scalar> Dataset<T> {
    pub fn new(matrix: BlockedSparseMatrix<T>, labels: Vec<T>) -> Result<Self> {
        if labels.len() != matrix.rows() {
            return Err(invalid(format!(
                "{} labels for a matrix with {} rows",
                labels.len(),
                matrix.rows()
            )));
        }
        Ok(Self { matrix, labels })
    }

    pub fn matrix(&self) -> &BlockedSparseMatrix<T> {
        &self.matrix
    }

    pub fn labels(&self) -> &[T] {
        &self.labels
    }

    pub fn partition(&self) -> &BlockPartition {
        self.matrix.partition()
    }

    pub fn with_partition(self, partition: BlockPartition) -> Result<Self> {
        Ok(Self {
            matrix: self.matrix.with_partition(partition)?,
            labels: self.labels,
        })
    }

    pub fn with_block_size(self, block_size: usize) -> Result<Self> {
        let p = BlockPartition::uniform(self.matrix.cols(), block_size)?;
        self.with_partition(p)
    }

    pub fn into_parts(self) -> (BlockedSparseMatrix<T>, Vec<T>) {
        (self.matrix, self.labels)
    }
}
