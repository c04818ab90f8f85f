use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use super::{DatasetError, LabeledDataset, Result};
use crate::graph::{FeatureMatrix, Graph, GraphError};

pub const SBM_MAX_ATTEMPTS: usize = 100;

/// Two interleaved unit half-circles with `n/2` points each and Gaussian
/// coordinate noise. Points are ordered moon 0 first, then moon 1.
pub fn synth_two_moons(n: usize, noise: f64, seed: u64) -> Result<LabeledDataset> {
    if n < 4 || !n.is_multiple_of(2) {
        return Err(DatasetError::InvalidParameter {
            name: "n",
            message: format!("must be an even count >= 4, got {n}"),
        });
    }
    if !(noise >= 0.0 && noise.is_finite()) {
        return Err(DatasetError::InvalidParameter {
            name: "noise",
            message: format!("must be a non-negative standard deviation, got {noise}"),
        });
    }
    let half = n / 2;
    let mut values = Vec::with_capacity(2 * n);
    let mut truth = Vec::with_capacity(n);
    for moon in 0..2 {
        for j in 0..half {
            let theta = PI * j as f64 / (half - 1) as f64;
            let (x, y) = if moon == 0 {
                (theta.cos(), theta.sin())
            } else {
                (1.0 - theta.cos(), 0.5 - theta.sin())
            };
            values.extend([x, y]);
            truth.push(moon);
        }
    }
    if noise > 0.0 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let normal = Normal::new(0.0, noise).expect("validated noise");
        values.iter_mut().for_each(|v| *v += normal.sample(&mut rng));
    }
    let features = FeatureMatrix::new(n, 2, values)?;
    LabeledDataset::new(format!("two-moons(n={n}, noise={noise}, seed={seed})"), features, truth)
}

/// Stochastic block model with unit weights.
///
/// Pairs `i < j` are visited in lexicographic order and each draws one
/// uniform `r ∈ [0, 1)`; the edge exists when `r < p`. Samples containing an
/// isolated node are discarded and redrawn from the same stream.
pub fn synth_sbm(sizes: &[usize], p_in: f64, p_out: f64, seed: u64) -> Result<(Graph, Vec<usize>)> {
    if sizes.len() < 2 {
        return Err(DatasetError::InvalidParameter {
            name: "sizes",
            message: "need at least two blocks".into(),
        });
    }
    if let Some(&s) = sizes.iter().find(|&&s| s < 2) {
        return Err(DatasetError::InvalidParameter {
            name: "sizes",
            message: format!("every block needs at least 2 nodes, got {s}"),
        });
    }
    for (name, p) in [("p-in", p_in), ("p-out", p_out)] {
        if !(0.0..=1.0).contains(&p) {
            return Err(DatasetError::InvalidParameter {
                name,
                message: format!("must be a probability in [0, 1], got {p}"),
            });
        }
    }
    if p_out > p_in {
        return Err(DatasetError::InvalidParameter {
            name: "p-out",
            message: format!("must not exceed p-in ({p_out} > {p_in})"),
        });
    }

    let truth: Vec<usize> = sizes
        .iter()
        .enumerate()
        .flat_map(|(b, &s)| std::iter::repeat_n(b, s))
        .collect();
    let n = truth.len();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for attempt in 1..=SBM_MAX_ATTEMPTS {
        let mut pairs = Vec::new();
        for i in 0..n {
            for j in i + 1..n {
                let p = if truth[i] == truth[j] { p_in } else { p_out };
                if rng.random::<f64>() < p {
                    pairs.push((i, j, 1.0));
                }
            }
        }
        match Graph::from_edges(n, pairs) {
            Ok(g) => return Ok((g, truth)),
            Err(GraphError::IsolatedNode(i)) => {
                log::debug!("sbm attempt {attempt}: node {i} isolated, resampling");
            }
            Err(e) => return Err(e.into()),
        }
    }
    Err(DatasetError::GenerationFailed {
        attempts: SBM_MAX_ATTEMPTS,
    })
}
