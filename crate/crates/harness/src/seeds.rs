//! Assignment of random streams to replications.
//!
//! Data for replication `r` come from one generator per `(scenario, r)`.
//! All resampling methods of a replication share one [`Streams`] family, so
//! the resamples at the estimate (try point 0) are the same draws for the
//! bootstrap, the neighborhood bootstrap and the importance-sampling
//! methods; within the family each `(try point, resample)` pair has its own
//! generator.

use loci_core::{mix, StreamRng, Streams};

const DATA: u64 = 1;
const RESAMPLE: u64 = 2;
const DESIGN: u64 = 3;
const VARIANT: u64 = 4;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SeedPlan {
    master: u64,
    root: Streams,
}

impl SeedPlan {
    pub fn new(master_seed: u64) -> Self {
        Self { master: master_seed, root: Streams::new(master_seed) }
    }

    pub fn master_seed(&self) -> u64 {
        self.master
    }

    /// Generator for the observed data of replication `rep`.
    pub fn data_rng(&self, rep: usize) -> StreamRng {
        self.root.substream(DATA).rng(rep, 0)
    }

    /// Second data generator of replication `rep` (e.g. a random design matrix).
    pub fn aux_rng(&self, rep: usize) -> StreamRng {
        self.root.substream(DATA).rng(rep, 1)
    }

    /// Resampling streams shared by every method of replication `rep`.
    pub fn resampling(&self, rep: usize) -> Streams {
        self.root.substream(RESAMPLE).substream(rep as u64)
    }

    /// Seed of the Latin hypercube drawn for replication `rep`.
    pub fn design_seed(&self, rep: usize) -> u64 {
        mix(self.root.substream(DESIGN).key(), rep as u64)
    }

    /// Independent plan for the `k`-th scenario of a sweep.
    pub fn variant(&self, k: usize) -> Self {
        Self { master: self.master, root: self.root.substream(VARIANT).substream(k as u64) }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    #[test]
    fn streams_differ_across_roles_and_replications() {
        let p = SeedPlan::new(11);
        let mut seen = std::collections::HashSet::new();
        for rep in 0..50 {
            assert!(seen.insert(p.data_rng(rep).random::<u64>()));
            assert!(seen.insert(p.aux_rng(rep).random::<u64>()));
            assert!(seen.insert(p.resampling(rep).rng(0, 0).random::<u64>()));
            assert!(seen.insert(p.resampling(rep).rng(1, 0).random::<u64>()));
            assert!(seen.insert(p.variant(1).data_rng(rep).random::<u64>()));
            assert!(seen.insert(p.design_seed(rep)));
        }
    }

    #[test]
    fn same_seed_same_plan() {
        assert_eq!(SeedPlan::new(5).data_rng(3).random::<u64>(), SeedPlan::new(5).data_rng(3).random::<u64>());
        assert_ne!(SeedPlan::new(5).data_rng(3).random::<u64>(), SeedPlan::new(6).data_rng(3).random::<u64>());
    }
}
