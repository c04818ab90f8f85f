use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{Graph, GraphError, Result};

/// Seed used by [`NormalizedGradient::operator_norm`] when the caller has no
/// preference.
pub const DEFAULT_NORM_SEED: u64 = 0x6b_6e_6f_72_6d;

/// The edge-wise normalized difference operator `K = W D⁻¹` restricted to
/// canonical edges: `(K u)_e = w_ij (u_i / d_i - u_j / d_j)`.
///
/// Its adjoint `Kᵀ` is the normalized divergence `D⁻¹ W` acting on edge
/// functions. `K` annihilates the degree vector.
#[derive(Debug, Clone, Copy)]
pub struct NormalizedGradient<'g> {
    graph: &'g Graph,
}

/// Result of a power iteration on `KᵀK`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OperatorNorm {
    pub estimate: f64,
    pub iterations: usize,
}

impl<'g> NormalizedGradient<'g> {
    pub fn new(graph: &'g Graph) -> Self {
        Self { graph }
    }

    pub fn graph(&self) -> &'g Graph {
        self.graph
    }

    /// Length of node functions.
    pub fn domain_dim(&self) -> usize {
        self.graph.n()
    }

    /// Length of edge functions.
    pub fn range_dim(&self) -> usize {
        self.graph.num_edges()
    }

    pub fn apply(&self, u: &[f64]) -> Result<Vec<f64>> {
        check_len(self.domain_dim(), u.len())?;
        let mut out = vec![0.0; self.range_dim()];
        self.apply_into(u, &mut out);
        Ok(out)
    }

    /// `out = K u`. Lengths must already match.
    pub fn apply_into(&self, u: &[f64], out: &mut [f64]) {
        debug_assert_eq!(u.len(), self.domain_dim());
        debug_assert_eq!(out.len(), self.range_dim());
        let d = self.graph.degrees();
        for (o, e) in out.iter_mut().zip(self.graph.edges()) {
            *o = e.weight * (u[e.i] / d[e.i] - u[e.j] / d[e.j]);
        }
    }

    pub fn adjoint(&self, z: &[f64]) -> Result<Vec<f64>> {
        check_len(self.range_dim(), z.len())?;
        let mut out = vec![0.0; self.domain_dim()];
        self.adjoint_into(z, &mut out);
        Ok(out)
    }

    /// `out = Kᵀ z`. Lengths must already match.
    pub fn adjoint_into(&self, z: &[f64], out: &mut [f64]) {
        debug_assert_eq!(z.len(), self.range_dim());
        debug_assert_eq!(out.len(), self.domain_dim());
        out.fill(0.0);
        for (&ze, e) in z.iter().zip(self.graph.edges()) {
            let flow = e.weight * ze;
            out[e.i] += flow;
            out[e.j] -= flow;
        }
        for (o, d) in out.iter_mut().zip(self.graph.degrees()) {
            *o /= d;
        }
    }

    /// Normalized total variation `Δ₁(u) = Σ_{i<j} w_ij |u_i/d_i - u_j/d_j|`.
    pub fn total_variation(&self, u: &[f64]) -> Result<f64> {
        check_len(self.domain_dim(), u.len())?;
        Ok(self.total_variation_unchecked(u))
    }

    pub(crate) fn total_variation_unchecked(&self, u: &[f64]) -> f64 {
        let d = self.graph.degrees();
        self.graph
            .edges()
            .iter()
            .map(|e| (e.weight * (u[e.i] / d[e.i] - u[e.j] / d[e.j])).abs())
            .sum()
    }

    /// Power-iteration estimate of the spectral norm `‖K‖₂ = √λ_max(KᵀK)`.
    ///
    /// Stops once the relative change of the eigenvalue estimate drops below
    /// `tol`; the start vector is drawn from `seed`.
    pub fn operator_norm(&self, max_iters: usize, tol: f64, seed: u64) -> Result<OperatorNorm> {
        let n = self.domain_dim();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut x: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
        normalize(&mut x);
        let mut kx = vec![0.0; self.range_dim()];
        let mut y = vec![0.0; n];
        let mut lambda = 0.0;
        for it in 1..=max_iters {
            self.apply_into(&x, &mut kx);
            self.adjoint_into(&kx, &mut y);
            let next = norm2(&y);
            if next == 0.0 {
                // Start vector in the nullspace; K is nonzero on any valid graph.
                return Err(GraphError::NoConvergence {
                    iters: it,
                    estimate: 0.0,
                });
            }
            for (xi, yi) in x.iter_mut().zip(&y) {
                *xi = yi / next;
            }
            let converged = (next - lambda).abs() <= tol * next;
            lambda = next;
            if converged {
                return Ok(OperatorNorm {
                    estimate: lambda.sqrt(),
                    iterations: it,
                });
            }
        }
        Err(GraphError::NoConvergence {
            iters: max_iters,
            estimate: lambda.sqrt(),
        })
    }
}

fn check_len(expected: usize, got: usize) -> Result<()> {
    if expected == got {
        Ok(())
    } else {
        Err(GraphError::DimensionMismatch { expected, got })
    }
}

fn norm2(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn normalize(v: &mut [f64]) {
    let s = norm2(v);
    if s > 0.0 {
        v.iter_mut().for_each(|x| *x /= s);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn pair() -> Graph {
        Graph::from_edges(2, [(0, 1, 1.0)]).unwrap()
    }

    fn path() -> Graph {
        Graph::from_edges(3, [(0, 1, 1.0), (1, 2, 1.0)]).unwrap()
    }

    #[test]
    fn gradient_on_pair() {
        let g = pair();
        assert_eq!(g.gradient().apply(&[1.0, -1.0]).unwrap(), vec![2.0]);
    }

    #[test]
    fn gradient_on_path() {
        let g = path();
        assert_eq!(g.gradient().apply(&[1.0, 0.0, -1.0]).unwrap(), vec![1.0, 1.0]);
    }

    #[test]
    fn degrees_are_in_the_nullspace() {
        let g = Graph::from_edges(4, [(0, 1, 0.3), (1, 2, 2.0), (2, 3, 1.5), (0, 3, 0.7)]).unwrap();
        let k = g.gradient();
        let ku = k.apply(g.degrees()).unwrap();
        assert!(ku.iter().all(|v| v.abs() < 1e-15));
        assert!(k.total_variation(g.degrees()).unwrap() < 1e-12);
    }

    #[test]
    fn divergence_on_pair() {
        let g = pair();
        let k = g.gradient();
        assert_eq!(k.adjoint(&[1.0]).unwrap(), vec![1.0, -1.0]);
        assert_eq!(k.adjoint(&[0.0]).unwrap(), vec![0.0, 0.0]);
    }

    #[test]
    fn total_variation_hand_values() {
        assert_eq!(pair().gradient().total_variation(&[1.0, -1.0]).unwrap(), 2.0);
        assert_eq!(path().gradient().total_variation(&[1.0, 0.0, -1.0]).unwrap(), 2.0);
    }

    #[test]
    fn dimension_mismatch() {
        let g = path();
        let k = g.gradient();
        assert!(matches!(
            k.apply(&[1.0]),
            Err(GraphError::DimensionMismatch { expected: 3, got: 1 })
        ));
        assert!(k.adjoint(&[1.0, 2.0, 3.0]).is_err());
        assert!(k.total_variation(&[]).is_err());
    }

    #[test]
    fn norm_of_pair_is_sqrt2() {
        let g = pair();
        let est = g.gradient().operator_norm(1000, 1e-14, DEFAULT_NORM_SEED).unwrap();
        assert_relative_eq!(est.estimate, 2f64.sqrt(), max_relative = 1e-12);
    }

    #[test]
    fn norm_reports_last_estimate_when_capped() {
        let g = Graph::from_edges(4, [(0, 1, 1.0), (1, 2, 3.0), (2, 3, 1.0), (3, 0, 0.2)]).unwrap();
        match g.gradient().operator_norm(1, 1e-30, 3) {
            Err(GraphError::NoConvergence { iters, estimate }) => {
                assert_eq!(iters, 1);
                assert!(estimate > 0.0);
            }
            other => panic!("expected NoConvergence, got {other:?}"),
        }
    }
}
