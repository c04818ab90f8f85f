use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{DatasetError, LabeledDataset, Result};
use crate::solver::{LabelConstraints, SolverError};

/// A stratified split into seed nodes and held-out evaluation nodes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Partition {
    pub labeled_fraction: f64,
    pub seed: u64,
    /// Seed nodes per class, sorted.
    pub seeds: Vec<Vec<usize>>,
    /// Nodes left for evaluation, sorted.
    pub heldout: Vec<usize>,
    /// True when every node is a seed and nothing remains to evaluate.
    pub degenerate: bool,
}

impl Partition {
    pub fn num_seeds(&self) -> usize {
        self.seeds.iter().map(Vec::len).sum()
    }

    pub fn constraints(&self, n: usize, epsilon: f64) -> std::result::Result<LabelConstraints, SolverError> {
        LabelConstraints::new(n, self.seeds.clone(), epsilon)
    }

    /// `(node, class)` pairs of every seed, ordered by node.
    pub fn seed_pairs(&self) -> Vec<(usize, usize)> {
        let mut pairs: Vec<_> = self
            .seeds
            .iter()
            .enumerate()
            .flat_map(|(k, s)| s.iter().map(move |&i| (i, k)))
            .collect();
        pairs.sort_unstable();
        pairs
    }
}

/// Stratified sampling without replacement: class `k` with `n_k` members
/// receives `clamp(round(fraction * n_k), 1, n_k)` seeds.
pub fn make_partition(dataset: &LabeledDataset, labeled_fraction: f64, seed: u64) -> Result<Partition> {
    stratified_partition(&dataset.truth, labeled_fraction, seed)
}

/// [`make_partition`] on a bare truth vector (e.g. an SBM without features).
pub fn stratified_partition(truth: &[usize], labeled_fraction: f64, seed: u64) -> Result<Partition> {
    let n = truth.len();
    let classes = super::count_classes(truth)?;
    if !(labeled_fraction > 0.0 && labeled_fraction <= 1.0) {
        return Err(DatasetError::InvalidParameter {
            name: "fraction",
            message: format!("must lie in (0, 1], got {labeled_fraction}"),
        });
    }
    if labeled_fraction * (n as f64) < classes as f64 {
        return Err(DatasetError::FractionTooSmall {
            fraction: labeled_fraction,
            n,
            classes,
        });
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut is_seed = vec![false; n];
    let mut seeds = Vec::with_capacity(classes);
    for k in 0..classes {
        let mut members: Vec<usize> = (0..n).filter(|&i| truth[i] == k).collect();
        let want = ((labeled_fraction * members.len() as f64).round() as usize).clamp(1, members.len());
        members.shuffle(&mut rng);
        members.truncate(want);
        members.sort_unstable();
        members.iter().for_each(|&i| is_seed[i] = true);
        seeds.push(members);
    }
    let heldout: Vec<usize> = (0..n).filter(|&i| !is_seed[i]).collect();
    let degenerate = heldout.is_empty();
    if degenerate {
        log::warn!("partition with fraction {labeled_fraction} labels every node; nothing left to evaluate");
    }
    Ok(Partition {
        labeled_fraction,
        seed,
        seeds,
        heldout,
        degenerate,
    })
}
