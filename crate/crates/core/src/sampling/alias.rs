use std::collections::VecDeque;

use rand::Rng;

use crate::sampling::BlockDistribution;
use crate::scalar::two_sum;

/// One alias bucket: returns `lower` with probability `threshold`, otherwise `upper`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AliasBucket {
    pub upper: usize,
    pub lower: usize,
    pub threshold: f64,
}

/// Walker alias table over `N` blocks; each bucket carries mass `1/N`.
#[derive(Debug, Clone, PartialEq)]
pub struct AliasTable {
    buckets: Vec<AliasBucket>,
}

impl AliasTable {
    pub fn new(dist: &BlockDistribution) -> Self {
        let n = dist.len();
        // scaled masses N p_i kept as unevaluated sums hi + lo
        let mut hi: Vec<f64> = dist.probabilities().iter().map(|p| p * n as f64).collect();
        let mut lo = vec![0.0; n];
        let mut small: VecDeque<usize> = VecDeque::new();
        let mut large: VecDeque<usize> = VecDeque::new();
        for (i, &q) in hi.iter().enumerate() {
            if q <= 1.0 {
                small.push_back(i);
            } else {
                large.push_back(i);
            }
        }
        let mut buckets = Vec::with_capacity(n);
        while let Some(l) = small.pop_front() {
            let thr = (hi[l] + lo[l]).clamp(0.0, 1.0);
            let Some(&u) = large.front() else {
                buckets.push(AliasBucket {
                    upper: l,
                    lower: l,
                    threshold: 1.0,
                });
                continue;
            };
            buckets.push(AliasBucket {
                upper: u,
                lower: l,
                threshold: thr,
            });
            // q_u <- q_u - (1 - q_l)
            let (s, e1) = two_sum(hi[u], hi[l]);
            let (s, e2) = two_sum(s, -1.0);
            let carry = lo[u] + lo[l] + e1 + e2;
            let (h, c) = two_sum(s, carry);
            hi[u] = h;
            lo[u] = c;
            if hi[u] + lo[u] <= 1.0 {
                large.pop_front();
                small.push_back(u);
            }
        }
        for u in large {
            buckets.push(AliasBucket {
                upper: u,
                lower: u,
                threshold: 1.0,
            });
        }
        Self { buckets }
    }

    pub fn buckets(&self) -> &[AliasBucket] {
        &self.buckets
    }

    pub fn len(&self) -> usize {
        self.buckets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.buckets.is_empty()
    }

    /// Draws a bucket uniformly, then compares a continuous `u` in `[0, 1)` to its threshold.
    #[inline]
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        let b = &self.buckets[rng.random_range(0..self.buckets.len())];
        let u: f64 = rng.random();
        if u < b.threshold {
            b.lower
        } else {
            b.upper
        }
    }
}
