use ndarray::Array2;

use super::{Result, SolverError};

/// Seed sets `I_k` per class and the margin `ε`.
///
/// A node in `I_k` is constrained to `u^k_i ≥ ε` and `u^{k'}_i ≤ -ε` for
/// every other class; the remaining (unlabeled) nodes carry the coupling
/// `Σ_k u^k_i = 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct LabelConstraints {
    n: usize,
    epsilon: f64,
    seeds: Vec<Vec<usize>>,
    label_of: Vec<Option<usize>>,
}

impl LabelConstraints {
    pub fn new(n: usize, seeds: Vec<Vec<usize>>, epsilon: f64) -> Result<Self> {
        let classes = seeds.len();
        if classes < 2 {
            return Err(SolverError::InvalidConstraints(format!(
                "need at least 2 classes, got {classes}"
            )));
        }
        if !(epsilon > 0.0 && epsilon <= 1.0) {
            return Err(SolverError::InvalidConstraints(format!(
                "epsilon must lie in (0, 1], got {epsilon}"
            )));
        }
        let mut label_of = vec![None; n];
        for (k, set) in seeds.iter().enumerate() {
            if set.is_empty() {
                return Err(SolverError::EmptyClass(k));
            }
            for &i in set {
                if i >= n {
                    return Err(SolverError::InvalidConstraints(format!(
                        "seed node {i} of class {k} out of range (n = {n})"
                    )));
                }
                match label_of[i] {
                    None => label_of[i] = Some(k),
                    Some(prev) if prev == k => {}
                    Some(prev) => {
                        return Err(SolverError::InvalidConstraints(format!(
                            "node {i} is seeded for classes {prev} and {k}"
                        )))
                    }
                }
            }
        }
        let seeds = seeds
            .into_iter()
            .map(|mut s| {
                s.sort_unstable();
                s.dedup();
                s
            })
            .collect();
        Ok(Self {
            n,
            epsilon,
            seeds,
            label_of,
        })
    }

    /// Builds constraints from `(node, class)` pairs for `classes` classes.
    pub fn from_pairs(n: usize, classes: usize, pairs: &[(usize, usize)], epsilon: f64) -> Result<Self> {
        let mut seeds = vec![Vec::new(); classes];
        for &(node, class) in pairs {
            if class >= classes {
                return Err(SolverError::InvalidConstraints(format!(
                    "node {node} has class {class}, but only {classes} classes are configured"
                )));
            }
            seeds[class].push(node);
        }
        Self::new(n, seeds, epsilon)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn num_classes(&self) -> usize {
        self.seeds.len()
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn seeds(&self, class: usize) -> &[usize] {
        &self.seeds[class]
    }

    pub fn label_of(&self, node: usize) -> Option<usize> {
        self.label_of[node]
    }

    pub fn is_seed(&self, node: usize) -> bool {
        self.label_of[node].is_some()
    }

    pub fn num_seeds(&self) -> usize {
        self.seeds.iter().map(Vec::len).sum()
    }

    /// Nodes without a seed label, in increasing order.
    pub fn unlabeled(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.n).filter(|&i| self.label_of[i].is_none())
    }

    /// Euclidean projection onto the constraint set, in place.
    ///
    /// `u` is class-major: shape `(classes, n)`. Seed rows are clamped
    /// coordinate-wise; unlabeled rows have their class mean removed.
    pub fn project(&self, u: &mut Array2<f64>) {
        debug_assert_eq!(u.dim(), (self.num_classes(), self.n));
        let eps = self.epsilon;
        let classes = self.num_classes();
        for (i, label) in self.label_of.iter().enumerate() {
            let mut col = u.column_mut(i);
            match *label {
                Some(own) => {
                    for (k, x) in col.iter_mut().enumerate() {
                        *x = if k == own { x.max(eps) } else { x.min(-eps) };
                    }
                }
                None => {
                    let mean = col.sum() / classes as f64;
                    // A mean at rounding level is what a centered column
                    // sums to; skipping it keeps the projection idempotent.
                    let scale = col.iter().fold(0.0f64, |m, x| m.max(x.abs()));
                    if mean.abs() > 4.0 * f64::EPSILON * scale {
                        col.iter_mut().for_each(|x| *x -= mean);
                    }
                }
            }
        }
    }

    /// Largest violation of the seed margins or the zero-sum coupling.
    pub fn max_violation(&self, u: &Array2<f64>) -> f64 {
        let eps = self.epsilon;
        let mut worst = 0.0f64;
        for (i, label) in self.label_of.iter().enumerate() {
            let col = u.column(i);
            match *label {
                Some(own) => {
                    for (k, &x) in col.iter().enumerate() {
                        let v = if k == own { eps - x } else { x + eps };
                        worst = worst.max(v);
                    }
                }
                None => worst = worst.max(col.sum().abs()),
            }
        }
        worst
    }
}
