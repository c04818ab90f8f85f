use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::{FeatureMatrix, Graph, GraphError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Metric {
    #[default]
    Euclidean,
    /// `1 - cos(x_i, x_j)`.
    Cosine,
}

/// Gaussian bandwidth: either fixed or the mean distance to the
/// `⌈k/2⌉`-th nearest neighbor over all nodes.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum Bandwidth {
    #[default]
    Auto,
    Fixed(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase", deny_unknown_fields)]
pub enum Kernel {
    /// `w = exp(-dist² / σ²)`.
    Gaussian { sigma: Bandwidth },
    /// `w = 1` for every k-NN pair.
    Binary,
}

impl Default for Kernel {
    fn default() -> Self {
        Kernel::Gaussian {
            sigma: Bandwidth::Auto,
        }
    }
}

/// How the directed k-NN relation becomes an undirected weight.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Symmetrization {
    /// `(w_ij + w_ji) / 2`, a missing direction counting as 0.
    #[default]
    Mean,
    Max,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct KernelSpec {
    pub metric: Metric,
    pub kernel: Kernel,
    pub k: usize,
    pub symmetrization: Symmetrization,
}

impl Default for KernelSpec {
    fn default() -> Self {
        Self {
            metric: Metric::Euclidean,
            kernel: Kernel::default(),
            k: 10,
            symmetrization: Symmetrization::Mean,
        }
    }
}

impl KernelSpec {
    pub fn validate(&self, n: usize) -> Result<()> {
        if self.k == 0 {
            return Err(GraphError::InvalidSpec("k must be at least 1".into()));
        }
        if self.k >= n {
            return Err(GraphError::InvalidSpec(format!(
                "k must be < n (k = {}, n = {n})",
                self.k
            )));
        }
        if let Kernel::Gaussian {
            sigma: Bandwidth::Fixed(s),
        } = self.kernel
        {
            if !(s > 0.0 && s.is_finite()) {
                return Err(GraphError::InvalidSpec(format!("sigma must be positive, got {s}")));
            }
        }
        Ok(())
    }
}

/// Exact k-NN graph. Neighbor ties are broken by the smaller node index, so
/// the result is a deterministic function of `(features, spec)`.
pub fn build_knn_graph(features: &FeatureMatrix, spec: &KernelSpec) -> Result<Graph> {
    let n = features.n();
    spec.validate(n)?;

    let norms: Vec<f64> = (0..n)
        .map(|i| features.row(i).iter().map(|x| x * x).sum::<f64>().sqrt())
        .collect();
    if spec.metric == Metric::Cosine {
        if let Some(i) = norms.iter().position(|&r| r == 0.0) {
            return Err(GraphError::DegenerateFeatures(format!(
                "row {i} has zero norm; cosine distance is undefined"
            )));
        }
    }

    let k = spec.k;
    let neighbors: Vec<Vec<(usize, f64)>> = (0..n)
        .into_par_iter()
        .map(|i| {
            let xi = features.row(i);
            let mut cand: Vec<(usize, f64)> = (0..n)
                .filter(|&j| j != i)
                .map(|j| (j, distance(spec.metric, xi, features.row(j), norms[i], norms[j])))
                .collect();
            let by_dist = |a: &(usize, f64), b: &(usize, f64)| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0));
            cand.select_nth_unstable_by(k - 1, by_dist);
            cand.truncate(k);
            cand.sort_by(by_dist);
            cand
        })
        .collect();

    let weight = match spec.kernel {
        Kernel::Binary => Weighting::Binary,
        Kernel::Gaussian { sigma } => {
            let sigma = match sigma {
                Bandwidth::Fixed(s) => s,
                Bandwidth::Auto => {
                    let rank = k.div_ceil(2) - 1;
                    neighbors.iter().map(|nb| nb[rank].1).sum::<f64>() / n as f64
                }
            };
            if !(sigma > 0.0) {
                return Err(GraphError::DegenerateFeatures(
                    "automatic bandwidth is zero (coincident neighbors)".into(),
                ));
            }
            Weighting::Gaussian(sigma)
        }
    };

    // (i, j) with i < j  ->  (w_ij, w_ji) of the directed relation.
    let mut directed: BTreeMap<(usize, usize), (f64, f64)> = BTreeMap::new();
    for (i, nb) in neighbors.iter().enumerate() {
        for &(j, dist) in nb {
            let w = weight.eval(dist);
            if i < j {
                directed.entry((i, j)).or_default().0 = w;
            } else {
                directed.entry((j, i)).or_default().1 = w;
            }
        }
    }
    let pairs = directed.into_iter().map(|((i, j), (a, b))| {
        let w = match spec.symmetrization {
            Symmetrization::Mean => (a + b) / 2.0,
            Symmetrization::Max => a.max(b),
        };
        (i, j, w)
    });
    Graph::from_edges(n, pairs)
}

enum Weighting {
    Binary,
    Gaussian(f64),
}

impl Weighting {
    fn eval(&self, dist: f64) -> f64 {
        match *self {
            Weighting::Binary => 1.0,
            Weighting::Gaussian(sigma) => (-(dist * dist) / (sigma * sigma)).exp(),
        }
    }
}

fn distance(metric: Metric, a: &[f64], b: &[f64], na: f64, nb: f64) -> f64 {
    match metric {
        Metric::Euclidean => a
            .iter()
            .zip(b)
            .map(|(x, y)| (x - y) * (x - y))
            .sum::<f64>()
            .sqrt(),
        Metric::Cosine => {
            let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
            (1.0 - dot / (na * nb)).max(0.0)
        }
    }
}

impl fmt::Display for Bandwidth {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Bandwidth::Auto => f.write_str("auto"),
            Bandwidth::Fixed(s) => write!(f, "{s}"),
        }
    }
}

impl FromStr for Bandwidth {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        if s.eq_ignore_ascii_case("auto") {
            return Ok(Bandwidth::Auto);
        }
        s.parse::<f64>()
            .map(Bandwidth::Fixed)
            .map_err(|_| format!("sigma must be a number or \"auto\", got {s:?}"))
    }
}

impl Serialize for Bandwidth {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Bandwidth::Auto => s.serialize_str("auto"),
            Bandwidth::Fixed(v) => s.serialize_f64(*v),
        }
    }
}

impl<'de> Deserialize<'de> for Bandwidth {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(f64),
            Text(String),
        }
        match Raw::deserialize(d)? {
            Raw::Num(v) => Ok(Bandwidth::Fixed(v)),
            Raw::Text(t) => t.parse().map_err(serde::de::Error::custom),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(k: usize, kernel: Kernel, sym: Symmetrization) -> KernelSpec {
        KernelSpec {
            metric: Metric::Euclidean,
            kernel,
            k,
            symmetrization: sym,
        }
    }

    #[test]
    fn collinear_points_binary_max() {
        let f = FeatureMatrix::new(3, 1, vec![0.0, 1.0, 10.0]).unwrap();
        let g = build_knn_graph(&f, &spec(1, Kernel::Binary, Symmetrization::Max)).unwrap();
        let e: Vec<_> = g.edges().iter().map(|e| (e.i, e.j, e.weight)).collect();
        assert_eq!(e, vec![(0, 1, 1.0), (1, 2, 1.0)]);
    }

    #[test]
    fn collinear_points_binary_mean_halves_one_way_edges() {
        let f = FeatureMatrix::new(3, 1, vec![0.0, 1.0, 10.0]).unwrap();
        let g = build_knn_graph(&f, &spec(1, Kernel::Binary, Symmetrization::Mean)).unwrap();
        let e: Vec<_> = g.edges().iter().map(|e| (e.i, e.j, e.weight)).collect();
        assert_eq!(e, vec![(0, 1, 1.0), (1, 2, 0.5)]);
    }

    #[test]
    fn identical_points_have_unit_gaussian_weight() {
        let f = FeatureMatrix::new(2, 1, vec![3.0, 3.0]).unwrap();
        let kernel = Kernel::Gaussian {
            sigma: Bandwidth::Fixed(1.0),
        };
        let g = build_knn_graph(&f, &spec(1, kernel, Symmetrization::Mean)).unwrap();
        assert_eq!(g.edges().len(), 1);
        assert_eq!(g.edges()[0].weight, 1.0);
    }

    #[test]
    fn auto_bandwidth_on_coincident_points_is_rejected() {
        let f = FeatureMatrix::new(3, 1, vec![1.0, 1.0, 1.0]).unwrap();
        let err = build_knn_graph(&f, &spec(1, Kernel::default(), Symmetrization::Mean)).unwrap_err();
        assert!(matches!(err, GraphError::DegenerateFeatures(_)));
    }

    #[test]
    fn auto_bandwidth_is_mean_of_ceil_half_k_neighbor() {
        // k = 3 -> second neighbor. Points 0, 1, 3, 6.
        let f = FeatureMatrix::new(4, 1, vec![0.0, 1.0, 3.0, 6.0]).unwrap();
        let g = build_knn_graph(&f, &spec(3, Kernel::default(), Symmetrization::Max)).unwrap();
        // second-nearest distances: 3, 2, 3, 5 -> sigma = 13/4.
        let w01 = g.edges().iter().find(|e| (e.i, e.j) == (0, 1)).unwrap().weight;
        assert!((w01 - (-1.0f64 / (3.25 * 3.25)).exp()).abs() < 1e-15);
    }

    #[test]
    fn cosine_rejects_zero_rows() {
        let f = FeatureMatrix::new(3, 2, vec![0.0, 0.0, 1.0, 0.0, 0.0, 1.0]).unwrap();
        let mut s = spec(1, Kernel::Binary, Symmetrization::Mean);
        s.metric = Metric::Cosine;
        assert!(matches!(
            build_knn_graph(&f, &s),
            Err(GraphError::DegenerateFeatures(_))
        ));
    }

    #[test]
    fn k_must_be_below_n() {
        let f = FeatureMatrix::new(3, 1, vec![0.0, 1.0, 2.0]).unwrap();
        let err = build_knn_graph(&f, &spec(3, Kernel::Binary, Symmetrization::Mean)).unwrap_err();
        assert!(err.to_string().contains("k must be < n"));
    }

    #[test]
    fn bandwidth_parsing_and_serde() {
        assert_eq!("auto".parse::<Bandwidth>().unwrap(), Bandwidth::Auto);
        assert_eq!("0.5".parse::<Bandwidth>().unwrap(), Bandwidth::Fixed(0.5));
        assert!("x".parse::<Bandwidth>().is_err());
        let s = KernelSpec::default();
        let json = serde_json::to_string(&s).unwrap();
        assert_eq!(serde_json::from_str::<KernelSpec>(&json).unwrap(), s);
        let fixed: Kernel = serde_json::from_str(r#"{"type":"gaussian","sigma":0.25}"#).unwrap();
        assert_eq!(
            fixed,
            Kernel::Gaussian {
                sigma: Bandwidth::Fixed(0.25)
            }
        );
    }
}
