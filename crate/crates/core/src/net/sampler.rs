use rand::seq::SliceRandom;
use rand::Rng;

use crate::error::{Error, Result};

pub const DEFAULT_BATCH_SIZE: usize = 272;

/// Draws training batches that always hold at least one coreferent pair and
/// one non-coreferent pair.
#[derive(Debug, Clone)]
pub struct BatchSampler {
    chains: Vec<usize>,
    members: Vec<Vec<usize>>,
    multi: Vec<usize>,
}

impl BatchSampler {
    /// `chains[i]` is the gold chain of mention `i`; singletons keep their
    /// own chain ids.
    pub fn new(chains: &[usize]) -> Result<Self> {
        let num_chains = chains.iter().max().map_or(0, |&c| c + 1);
        let mut members = vec![Vec::new(); num_chains];
        for (i, &c) in chains.iter().enumerate() {
            members[c].push(i);
        }
        let multi: Vec<usize> = (0..num_chains).filter(|&c| members[c].len() >= 2).collect();
        let distinct = members.iter().filter(|m| !m.is_empty()).count();
        if multi.is_empty() {
            return Err(Error::Sampler("no chain has two or more mentions".into()));
        }
        if distinct < 2 {
            return Err(Error::Sampler("need at least two distinct chains".into()));
        }
        Ok(BatchSampler {
            chains: chains.to_vec(),
            members,
            multi,
        })
    }

    pub fn len(&self) -> usize {
        self.chains.len()
    }

    pub fn is_empty(&self) -> bool {
        self.chains.is_empty()
    }

    /// Batches per epoch, `ceil(n / batch_size)`.
    pub fn batches_per_epoch(&self, batch_size: usize) -> usize {
        self.len().div_ceil(batch_size.max(1))
    }

    /// Row indices of one batch, without repeats. A coreferent pair and a
    /// mention from another chain are seeded first; the rest is filled
    /// uniformly. When `size >= n` the batch is every mention, shuffled.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R, size: usize) -> Vec<usize> {
        let n = self.len();
        if size >= n {
            let mut all: Vec<usize> = (0..n).collect();
            all.shuffle(rng);
            return all;
        }
        let size = size.max(3);
        let chain = self.multi[rng.random_range(0..self.multi.len())];
        let members = &self.members[chain];
        let a = members[rng.random_range(0..members.len())];
        let mut b = members[rng.random_range(0..members.len() - 1)];
        if b == a {
            b = *members.last().unwrap();
        }
        // uniform over mentions outside the chain: rejection is cheap since
        // the chain is a small fraction of the data in practice
        let c = loop {
            let cand = rng.random_range(0..n);
            if self.chains[cand] != chain {
                break cand;
            }
        };
        let mut pool: Vec<usize> = (0..n).filter(|&i| i != a && i != b && i != c).collect();
        let fill = size - 3;
        for k in 0..fill {
            let j = rng.random_range(k..pool.len());
            pool.swap(k, j);
        }
        let mut batch = vec![a, b, c];
        batch.extend_from_slice(&pool[..fill]);
        batch.shuffle(rng);
        batch
    }
}
