use ndarray::Array2;

use super::{EvalError, Result};
use crate::graph::Graph;
use crate::solver::{LabelConstraints, Prediction};

/// Normalized p=2 label spreading:
/// `F ← α D^{-1/2} W D^{-1/2} F + (1 - α) Y`, iterated until the largest
/// entry change drops below `tol`; labels are the row-wise argmax of `F`.
///
/// `Y` is the one-hot seed matrix. Since the spectral radius of the
/// normalized adjacency is at most 1, the iteration contracts at rate `α`.
pub fn baseline_label_spreading(
    graph: &Graph,
    constraints: &LabelConstraints,
    alpha: f64,
    max_iters: usize,
    tol: f64,
) -> Result<Prediction> {
    let n = graph.n();
    if constraints.n() != n {
        return Err(EvalError::ShapeMismatch(format!(
            "constraints cover {} nodes, graph has {n}",
            constraints.n()
        )));
    }
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(EvalError::InvalidExperiment(format!("alpha must lie in (0, 1), got {alpha}")));
    }
    let classes = constraints.num_classes();
    let mut y = Array2::<f64>::zeros((n, classes));
    for i in 0..n {
        if let Some(k) = constraints.label_of(i) {
            y[[i, k]] = 1.0;
        }
    }
    let inv_sqrt: Vec<f64> = graph.degrees().iter().map(|d| 1.0 / d.sqrt()).collect();

    let mut f = y.clone();
    let mut next = Array2::<f64>::zeros((n, classes));
    for _ in 0..max_iters {
        for i in 0..n {
            let mut row = next.row_mut(i);
            row.assign(&y.row(i));
            row.mapv_inplace(|v| (1.0 - alpha) * v);
            for (j, w) in graph.neighbors(i) {
                let s = alpha * w * inv_sqrt[i] * inv_sqrt[j];
                row.scaled_add(s, &f.row(j));
            }
        }
        let change = f
            .iter()
            .zip(next.iter())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        std::mem::swap(&mut f, &mut next);
        if change < tol {
            return Ok(Prediction::from_scores(f));
        }
    }
    Err(EvalError::NoConvergence {
        iters: max_iters,
        last: Box::new(Prediction::from_scores(f)),
    })
}
