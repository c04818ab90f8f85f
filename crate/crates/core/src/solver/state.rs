use ndarray::{Array2, Zip};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{InitRule, LabelConstraints, Result, ShiftRule, SolverConfig, SolverError};
use crate::graph::{Graph, NormalizedGradient};

/// Iterates of the solver. All matrices are class-major: row `k` is the
/// node (or edge) function of class `k`.
#[derive(Debug, Clone, PartialEq)]
pub struct MultiClassState {
    /// Primal scores, shape `(classes, n)`.
    pub u: Array2<f64>,
    /// Dual edge variables, shape `(classes, |E|)`, each entry in `[-1, 1]`.
    pub z: Array2<f64>,
    /// Extrapolated primal point of the inner loop.
    pub u_bar: Array2<f64>,
    /// Snapshot of `u` at the start of the current outer step.
    pub v: Array2<f64>,
}

impl MultiClassState {
    pub fn num_classes(&self) -> usize {
        self.u.nrows()
    }

    /// Resets the inner-loop variables to start from the current `u`:
    /// `v = ū = u` and `z^k = clamp(K u^k, -1, 1)`.
    pub fn restart_from_u(&mut self, k: &NormalizedGradient<'_>) {
        self.v.assign(&self.u);
        self.u_bar.assign(&self.u);
        for (u_row, mut z_row) in self.u.rows().into_iter().zip(self.z.rows_mut()) {
            let z_slice = z_row.as_slice_mut().expect("contiguous");
            k.apply_into(u_row.as_slice().expect("contiguous"), z_slice);
            z_slice.iter_mut().for_each(|x| *x = x.clamp(-1.0, 1.0));
        }
    }
}

/// Builds `u⁽⁰⁾` according to `config.init`, then makes it consistent with
/// `config.shift`:
///
/// - [`ShiftRule::Median`]: project, median-shift, normalize.
/// - [`ShiftRule::Degree`]: normalize, then project, so that the starting
///   iterate lies in `C`.
///
/// `z⁽⁰⁾ = clamp(K u⁽⁰⁾, -1, 1)`. Deterministic for a fixed `config.seed`.
pub fn initialize_state(graph: &Graph, constraints: &LabelConstraints, config: &SolverConfig) -> Result<MultiClassState> {
    let n = graph.n();
    if constraints.n() != n {
        return Err(SolverError::ShapeMismatch(format!(
            "constraints cover {} nodes, graph has {n}",
            constraints.n()
        )));
    }
    let mut u = match config.init {
        InitRule::Random => random_start(constraints, config.seed),
        InitRule::Diffusion => {
            let mut u = diffusion_start(graph, constraints, DIFFUSION_ALPHA, DIFFUSION_ITERS);
            jitter(&mut u, constraints, config.seed);
            u
        }
    };
    match config.shift {
        ShiftRule::Median => {
            constraints.project(&mut u);
            median_shift(&mut u);
            normalize_global(&mut u)?;
        }
        ShiftRule::Degree => {
            normalize_global(&mut u)?;
            constraints.project(&mut u);
        }
    }

    let edges = graph.num_edges();
    let mut state = MultiClassState {
        v: u.clone(),
        u_bar: u.clone(),
        u,
        z: Array2::zeros((constraints.num_classes(), edges)),
    };
    state.restart_from_u(&graph.gradient());
    Ok(state)
}

pub const DIFFUSION_ALPHA: f64 = 0.9;
pub const DIFFUSION_ITERS: usize = 200;
/// Relative size of the random perturbation added to the diffused start.
pub const JITTER: f64 = 1e-3;

/// Seeds at `±ε`, unlabeled entries i.i.d. uniform in `(-1, 1)`.
pub fn random_start(constraints: &LabelConstraints, seed: u64) -> Array2<f64> {
    let classes = constraints.num_classes();
    let eps = constraints.epsilon();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut u = Array2::zeros((classes, constraints.n()));
    for i in 0..constraints.n() {
        match constraints.label_of(i) {
            Some(own) => {
                for k in 0..classes {
                    u[[k, i]] = if k == own { eps } else { -eps };
                }
            }
            None => {
                for k in 0..classes {
                    u[[k, i]] = rng.random_range(-1.0..1.0);
                }
            }
        }
    }
    u
}

/// Adds `JITTER · max|u| · uniform(-1, 1)` to unlabeled entries, which
/// breaks exact ties such as nodes no seed reaches.
fn jitter(u: &mut Array2<f64>, constraints: &LabelConstraints, seed: u64) {
    let scale = JITTER * u.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for i in 0..constraints.n() {
        if constraints.is_seed(i) {
            continue;
        }
        for k in 0..u.nrows() {
            u[[k, i]] += scale * rng.random_range(-1.0..1.0);
        }
    }
}

/// Seed one-hot matrix diffused by `F ← α S F + (1 - α) Y`, with
/// `S = D^{-1/2} W D^{-1/2}`, mapped back to degree scale `√d F`.
pub fn diffusion_start(graph: &Graph, constraints: &LabelConstraints, alpha: f64, iters: usize) -> Array2<f64> {
    let n = graph.n();
    let classes = constraints.num_classes();
    let mut y = Array2::<f64>::zeros((classes, n));
    for i in 0..n {
        if let Some(k) = constraints.label_of(i) {
            y[[k, i]] = 1.0;
        }
    }
    let inv_sqrt: Vec<f64> = graph.degrees().iter().map(|d| 1.0 / d.sqrt()).collect();
    let mut f = y.clone();
    let mut next = y.clone();
    for _ in 0..iters {
        for k in 0..classes {
            for i in 0..n {
                let mut acc = (1.0 - alpha) * y[[k, i]];
                for (j, w) in graph.neighbors(i) {
                    acc += alpha * w * inv_sqrt[i] * inv_sqrt[j] * f[[k, j]];
                }
                next[[k, i]] = acc;
            }
        }
        std::mem::swap(&mut f, &mut next);
    }
    for k in 0..classes {
        for i in 0..n {
            f[[k, i]] /= inv_sqrt[i];
        }
    }
    f
}

/// Median of a slice; the mean of the two middle values for even length.
pub fn median(values: &[f64]) -> f64 {
    assert!(!values.is_empty(), "median of an empty slice");
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let m = sorted.len() / 2;
    if sorted.len() % 2 == 1 {
        sorted[m]
    } else {
        0.5 * (sorted[m - 1] + sorted[m])
    }
}

/// Subtracts from each class row its median over all nodes.
pub fn median_shift(u: &mut Array2<f64>) {
    for mut row in u.rows_mut() {
        let m = median(row.as_slice().expect("contiguous"));
        row.iter_mut().for_each(|x| *x -= m);
    }
}

/// Weighted median: the smallest value whose cumulative weight reaches half
/// the total, or the midpoint of the two straddling values on an exact split.
pub fn weighted_median(values: &[f64], weights: &[f64]) -> f64 {
    assert!(!values.is_empty() && values.len() == weights.len());
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let half = weights.iter().sum::<f64>() / 2.0;
    let mut cumulative = 0.0;
    for (pos, &i) in order.iter().enumerate() {
        cumulative += weights[i];
        if (cumulative - half).abs() <= 1e-12 * half {
            return match order.get(pos + 1) {
                Some(&next) => 0.5 * (values[i] + values[next]),
                None => values[i],
            };
        }
        if cumulative > half {
            return values[i];
        }
    }
    values[order[order.len() - 1]]
}

/// Shifts each class along the degree vector, `u_i ← u_i - m d_i`, where `m`
/// is the degree-weighted median of `u_i / d_i`.
///
/// This is the shift that leaves `Δ₁` unchanged (degrees span its
/// nullspace) while minimizing `‖u‖₁`. On a regular graph it coincides with
/// [`median_shift`].
pub fn degree_median_shift(u: &mut Array2<f64>, degrees: &[f64]) {
    let mut ratios = vec![0.0; degrees.len()];
    for mut row in u.rows_mut() {
        for ((r, x), d) in ratios.iter_mut().zip(row.iter()).zip(degrees) {
            *r = x / d;
        }
        let m = weighted_median(&ratios, degrees);
        row.iter_mut().zip(degrees).for_each(|(x, d)| *x -= m * d);
    }
}

pub(crate) fn apply_shift(u: &mut Array2<f64>, degrees: &[f64], rule: ShiftRule) {
    match rule {
        ShiftRule::Median => median_shift(u),
        ShiftRule::Degree => degree_median_shift(u, degrees),
    }
}

/// Divides the stacked state by its Frobenius norm.
pub fn normalize_global(u: &mut Array2<f64>) -> Result<()> {
    let norm = frobenius(u);
    if norm < 1e-14 {
        return Err(SolverError::DegenerateState);
    }
    u.mapv_inplace(|x| x / norm);
    Ok(())
}

pub(crate) fn frobenius(u: &Array2<f64>) -> f64 {
    u.iter().map(|x| x * x).sum::<f64>().sqrt()
}

pub(crate) fn frobenius_diff(a: &Array2<f64>, b: &Array2<f64>) -> f64 {
    let mut s = 0.0;
    Zip::from(a).and(b).for_each(|x, y| s += (x - y) * (x - y));
    s.sqrt()
}
