//! Block-selection distributions and alias-method sampling.

mod alias;
mod distribution;

pub use alias::{AliasBucket, AliasTable};
pub use distribution::{BlockDistribution, SamplerKind};

use rand::Rng;

/// Fixed-distribution block sampler.
#[derive(Debug, Clone)]
pub struct BlockSampler {
    dist: BlockDistribution,
    table: AliasTable,
}

impl BlockSampler {
    pub fn new(dist: BlockDistribution) -> Self {
        let table = AliasTable::new(&dist);
        Self { dist, table }
    }

    pub fn distribution(&self) -> &BlockDistribution {
        &self.dist
    }

    pub fn table(&self) -> &AliasTable {
        &self.table
    }

    #[inline]
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        self.table.sample(rng)
    }
}
