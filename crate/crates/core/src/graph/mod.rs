//! Sparse weighted graphs, k-NN construction from features, and the
//! degree-normalized difference operator behind the p=1 graph Laplacian.
//!
//! A [`Graph`] stores a symmetric CSR adjacency together with its node
//! degrees and a canonical edge list (one entry per unordered pair, `i < j`).
//! The edge list fixes the orientation used by [`NormalizedGradient`]:
//!
//! ```text
//! (K u)_e = w_ij * (u_i / d_i - u_j / d_j)      for e = (i, j), i < j
//! ```
//!
//! so that the normalized total variation is `Δ₁(u) = Σ_e |(K u)_e|`.

mod io;
mod knn;
mod operator;

pub use io::{read_graph, read_graph_file, write_graph, write_graph_file, GRAPH_MAGIC};
pub use knn::{build_knn_graph, Bandwidth, Kernel, KernelSpec, Metric, Symmetrization};
pub use operator::{NormalizedGradient, OperatorNorm, DEFAULT_NORM_SEED};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum GraphError {
    #[error("feature matrix must have at least 2 rows and 1 column, got {n}x{d}")]
    TooSmall { n: usize, d: usize },
    #[error("feature value at row {row}, column {col} is not finite")]
    NonFinite { row: usize, col: usize },
    #[error("feature buffer has {len} values, expected {n}x{d}")]
    BadShape { n: usize, d: usize, len: usize },
    #[error("invalid kernel spec: {0}")]
    InvalidSpec(String),
    #[error("node {0} is isolated (degree 0)")]
    IsolatedNode(usize),
    #[error("degenerate features: {0}")]
    DegenerateFeatures(String),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("invalid graph: {0}")]
    Invalid(String),
    #[error("power iteration did not converge after {iters} iterations (last estimate {estimate})")]
    NoConvergence { iters: usize, estimate: f64 },
    #[error("graph cache: {0}")]
    Format(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, GraphError>;

/// Dense `n x d` feature vectors, one row per node.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    n: usize,
    d: usize,
    values: Vec<f64>,
}

impl FeatureMatrix {
    pub fn new(n: usize, d: usize, values: Vec<f64>) -> Result<Self> {
        if n < 2 || d < 1 {
            return Err(GraphError::TooSmall { n, d });
        }
        if values.len() != n * d {
            return Err(GraphError::BadShape {
                n,
                d,
                len: values.len(),
            });
        }
        if let Some(pos) = values.iter().position(|v| !v.is_finite()) {
            return Err(GraphError::NonFinite {
                row: pos / d,
                col: pos % d,
            });
        }
        Ok(Self { n, d, values })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        let d = rows.first().map_or(0, Vec::len);
        if let Some(bad) = rows.iter().find(|r| r.len() != d) {
            return Err(GraphError::BadShape {
                n,
                d,
                len: bad.len(),
            });
        }
        Self::new(n, d, rows.concat())
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.d..(i + 1) * self.d]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }
}

/// An undirected edge `(i, j)` with `i < j`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Edge {
    pub i: usize,
    pub j: usize,
    pub weight: f64,
}

/// Symmetric weighted adjacency in CSR form.
///
/// Invariants, checked on every construction path: weights are finite and
/// non-negative, `w_ij == w_ji` bitwise, no self loops, every degree is
/// strictly positive, and the edge list mirrors the upper triangle of the
/// CSR matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Graph {
    n: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    weights: Vec<f64>,
    degrees: Vec<f64>,
    edges: Vec<Edge>,
}

impl Graph {
    /// Builds a graph from undirected weighted pairs.
    ///
    /// Pairs may be given in either orientation; duplicates are rejected.
    /// Pairs with weight exactly zero are dropped.
    pub fn from_edges(n: usize, pairs: impl IntoIterator<Item = (usize, usize, f64)>) -> Result<Self> {
        let mut edges = Vec::new();
        for (a, b, w) in pairs {
            if a >= n || b >= n {
                return Err(GraphError::Invalid(format!(
                    "edge ({a}, {b}) out of range for n = {n}"
                )));
            }
            if a == b {
                return Err(GraphError::Invalid(format!("self loop at node {a}")));
            }
            if !w.is_finite() || w < 0.0 {
                return Err(GraphError::Invalid(format!(
                    "edge ({a}, {b}) has invalid weight {w}"
                )));
            }
            if w == 0.0 {
                continue;
            }
            let (i, j) = if a < b { (a, b) } else { (b, a) };
            edges.push(Edge { i, j, weight: w });
        }
        edges.sort_by_key(|e| (e.i, e.j));
        if let Some(w) = edges.windows(2).find(|w| (w[0].i, w[0].j) == (w[1].i, w[1].j)) {
            return Err(GraphError::Invalid(format!(
                "duplicate edge ({}, {})",
                w[0].i, w[0].j
            )));
        }

        let mut adjacency: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
        for e in &edges {
            adjacency[e.i].push((e.j, e.weight));
            adjacency[e.j].push((e.i, e.weight));
        }
        let mut row_ptr = Vec::with_capacity(n + 1);
        let mut col_idx = Vec::with_capacity(2 * edges.len());
        let mut weights = Vec::with_capacity(2 * edges.len());
        row_ptr.push(0);
        for row in &mut adjacency {
            row.sort_by_key(|&(j, _)| j);
            for &(j, w) in row.iter() {
                col_idx.push(j);
                weights.push(w);
            }
            row_ptr.push(col_idx.len());
        }
        Self::from_csr(n, row_ptr, col_idx, weights)
    }

    /// Builds a graph from raw CSR arrays, validating every invariant.
    /// Degrees are recomputed as row sums.
    pub fn from_csr(n: usize, row_ptr: Vec<usize>, col_idx: Vec<usize>, weights: Vec<f64>) -> Result<Self> {
        let degrees = validate_csr(n, &row_ptr, &col_idx, &weights)?;
        let mut edges = Vec::with_capacity(col_idx.len() / 2);
        for i in 0..n {
            for p in row_ptr[i]..row_ptr[i + 1] {
                let j = col_idx[p];
                if i < j {
                    edges.push(Edge {
                        i,
                        j,
                        weight: weights[p],
                    });
                }
            }
        }
        Ok(Self {
            n,
            row_ptr,
            col_idx,
            weights,
            degrees,
            edges,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Number of undirected edges.
    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    /// Number of stored CSR entries (twice the number of undirected edges).
    pub fn nnz(&self) -> usize {
        self.col_idx.len()
    }

    pub fn row_ptr(&self) -> &[usize] {
        &self.row_ptr
    }

    pub fn col_idx(&self) -> &[usize] {
        &self.col_idx
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn degrees(&self) -> &[f64] {
        &self.degrees
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    /// Neighbors of `i` with their weights, in increasing column order.
    pub fn neighbors(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let range = self.row_ptr[i]..self.row_ptr[i + 1];
        self.col_idx[range.clone()]
            .iter()
            .copied()
            .zip(self.weights[range].iter().copied())
    }

    pub fn degree_count(&self, i: usize) -> usize {
        self.row_ptr[i + 1] - self.row_ptr[i]
    }

    /// Returns a copy with every weight multiplied by `alpha > 0`.
    pub fn scaled(&self, alpha: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha.is_finite()) {
            return Err(GraphError::Invalid(format!("scale factor {alpha} must be positive")));
        }
        let weights = self.weights.iter().map(|w| w * alpha).collect();
        Self::from_csr(self.n, self.row_ptr.clone(), self.col_idx.clone(), weights)
    }

    /// Minimum, mean and maximum degree.
    pub fn degree_summary(&self) -> (f64, f64, f64) {
        let min = self.degrees.iter().copied().fold(f64::INFINITY, f64::min);
        let max = self.degrees.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let mean = self.degrees.iter().sum::<f64>() / self.n as f64;
        (min, mean, max)
    }

    pub fn gradient(&self) -> NormalizedGradient<'_> {
        NormalizedGradient::new(self)
    }
}

fn validate_csr(n: usize, row_ptr: &[usize], col_idx: &[usize], weights: &[f64]) -> Result<Vec<f64>> {
    let invalid = |msg: String| Err(GraphError::Invalid(msg));
    if n == 0 {
        return invalid("graph has no nodes".into());
    }
    if row_ptr.len() != n + 1 {
        return invalid(format!("row pointer has length {}, expected {}", row_ptr.len(), n + 1));
    }
    if row_ptr[0] != 0 || row_ptr[n] != col_idx.len() || col_idx.len() != weights.len() {
        return invalid("row pointer bounds do not match column/weight arrays".into());
    }
    if row_ptr.windows(2).any(|w| w[0] > w[1]) {
        return invalid("row pointer is not monotone".into());
    }
    let mut degrees = vec![0.0; n];
    for i in 0..n {
        let row = &col_idx[row_ptr[i]..row_ptr[i + 1]];
        if row.windows(2).any(|w| w[0] >= w[1]) {
            return invalid(format!("row {i} columns are not strictly increasing"));
        }
        for p in row_ptr[i]..row_ptr[i + 1] {
            let j = col_idx[p];
            let w = weights[p];
            if j >= n {
                return invalid(format!("column {j} out of range in row {i}"));
            }
            if j == i {
                return invalid(format!("self loop at node {i}"));
            }
            if !w.is_finite() || w <= 0.0 {
                return invalid(format!("entry ({i}, {j}) has invalid weight {w}"));
            }
            let mirror = &col_idx[row_ptr[j]..row_ptr[j + 1]];
            match mirror.binary_search(&i) {
                Ok(q) if weights[row_ptr[j] + q].to_bits() == w.to_bits() => {}
                _ => return invalid(format!("entry ({i}, {j}) has no identical mirror ({j}, {i})")),
            }
            degrees[i] += w;
        }
        if degrees[i] <= 0.0 {
            return Err(GraphError::IsolatedNode(i));
        }
    }
    Ok(degrees)
}
