//! Multi-class ratio minimization of the normalized p=1 graph Laplacian.
//!
//! Each class `k` owns a node function `u^k`. The outer loop repeatedly
//! solves the proximal problem
//!
//! ```text
//! min_{u ∈ C}  ‖u - v‖² / (2Δt) + Σ_k ( Δ₁(u^k) - c^k ⟨s^k, u^k⟩ ),
//!     c^k = Δ₁(v^k) / ‖v^k‖₁,   s^k = sign(v^k)
//! ```
//!
//! with an accelerated primal-dual inner loop, then re-centers every class
//! and rescales the stacked state to unit norm. `C` holds the seed margins
//! and the zero-sum coupling of unlabeled nodes. Final labels are the
//! per-node argmax over classes.
//!
//! The nullspace of `Δ₁` is spanned by the degree vector, so the default
//! [`ShiftRule::Degree`] re-centers along `d` rather than by a constant; see
//! [`outer_step`] for how this keeps every outer step a ratio decrease.

mod constraints;
mod primal_dual;
mod state;

pub use constraints::LabelConstraints;
pub use primal_dual::{balanced_sign, inner_primal_dual, outer_step, InnerReport, OuterRecord};
pub use state::{
    degree_median_shift, diffusion_start, initialize_state, median, median_shift, normalize_global, random_start,
    weighted_median, MultiClassState,
};

use std::time::Instant;

use ndarray::Array2;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::{Graph, GraphError, NormalizedGradient, DEFAULT_NORM_SEED};

#[derive(Debug, Error)]
pub enum SolverError {
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("class {0} has no seeds")]
    EmptyClass(usize),
    #[error("invalid constraints: {0}")]
    InvalidConstraints(String),
    #[error("invalid solver config: {0}")]
    InvalidConfig(String),
    #[error("non-finite value at inner iteration {iteration}")]
    NonFinite { iteration: usize },
    #[error("state collapsed to zero after the median shift")]
    DegenerateState,
    #[error("solve aborted at outer step {outer}: {source}")]
    Aborted {
        outer: usize,
        source: Box<SolverError>,
        trace: Box<SolveTrace>,
    },
    #[error(transparent)]
    Graph(#[from] GraphError),
}

impl SolverError {
    /// True for numerical breakdowns (as opposed to bad input).
    pub fn is_numerical(&self) -> bool {
        match self {
            SolverError::NonFinite { .. } | SolverError::DegenerateState => true,
            SolverError::Aborted { source, .. } => source.is_numerical(),
            _ => false,
        }
    }
}

pub type Result<T> = std::result::Result<T, SolverError>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum StepRule {
    /// Require `σ₀ τ₀ < 4`.
    Paper,
    /// Require `σ₀ τ₀ ‖K‖² < 1`, shrinking both steps by a common factor
    /// when the configured pair violates it.
    #[default]
    Safeguarded,
}

/// Step-size update factor `γ_ℓ` of the accelerated inner loop.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Acceleration {
    /// `γ = 1 / √(1 + τ/Δt)`.
    #[default]
    Paper,
    /// `γ = 1 / √(1 + 2τ/Δt)`, the rate matching a `1/Δt`-strongly convex
    /// primal term.
    Standard,
}

/// Re-centering applied after each outer step.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum ShiftRule {
    /// Subtract the plain median of each class over all nodes.
    Median,
    /// Subtract `m d`, with `m` the degree-weighted median of `u / d`.
    #[default]
    Degree,
}

/// Starting point of the outer iteration.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum InitRule {
    /// Seeds at `±ε`, unlabeled entries uniform in `(-1, 1)`.
    Random,
    /// Seed indicators diffused over the graph (a p=2 start), with a small
    /// random perturbation.
    #[default]
    Diffusion,
}

impl Acceleration {
    pub fn gamma(self, tau: f64, dt: f64) -> f64 {
        match self {
            Acceleration::Paper => 1.0 / (1.0 + tau / dt).sqrt(),
            Acceleration::Standard => 1.0 / (1.0 + 2.0 * tau / dt).sqrt(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverConfig {
    pub dt: f64,
    pub sigma0: f64,
    pub tau0: f64,
    pub inner_max: usize,
    pub inner_tol: f64,
    pub outer_max: usize,
    pub outer_tol: f64,
    pub seed: u64,
    pub step_rule: StepRule,
    pub acceleration: Acceleration,
    pub shift: ShiftRule,
    pub init: InitRule,
    pub zero_guard: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            dt: 1.0,
            sigma0: 1.9,
            tau0: 1.9,
            inner_max: 2000,
            inner_tol: 1e-8,
            outer_max: 100,
            outer_tol: 1e-6,
            seed: 0,
            step_rule: StepRule::Safeguarded,
            acceleration: Acceleration::Paper,
            shift: ShiftRule::Degree,
            init: InitRule::Diffusion,
            zero_guard: 1e-12,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = |name: &str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(SolverError::InvalidConfig(format!("{name} must be positive, got {v}")))
            }
        };
        positive("dt", self.dt)?;
        positive("sigma0", self.sigma0)?;
        positive("tau0", self.tau0)?;
        positive("inner_tol", self.inner_tol)?;
        positive("zero_guard", self.zero_guard)?;
        if !(self.outer_tol >= 0.0) {
            return Err(SolverError::InvalidConfig(format!(
                "outer_tol must be non-negative, got {}",
                self.outer_tol
            )));
        }
        if self.inner_max == 0 || self.outer_max == 0 {
            return Err(SolverError::InvalidConfig(
                "inner_max and outer_max must be at least 1".into(),
            ));
        }
        if self.step_rule == StepRule::Paper && self.sigma0 * self.tau0 >= 4.0 {
            return Err(SolverError::InvalidConfig(format!(
                "step rule 'paper' requires sigma0 * tau0 < 4, got {}",
                self.sigma0 * self.tau0
            )));
        }
        Ok(())
    }

    /// Initial `(σ₀, τ₀)` after applying the step rule on this graph.
    pub fn resolved_steps(&self, k: &NormalizedGradient<'_>) -> Result<(f64, f64)> {
        self.validate()?;
        match self.step_rule {
            StepRule::Paper => Ok((self.sigma0, self.tau0)),
            StepRule::Safeguarded => {
                let norm = match k.operator_norm(10_000, 1e-10, DEFAULT_NORM_SEED) {
                    Ok(est) => est.estimate,
                    Err(GraphError::NoConvergence { estimate, .. }) => estimate,
                    Err(e) => return Err(e.into()),
                };
                // Power iteration approaches ‖K‖ from below; pad slightly.
                let bound = (norm * 1.01).powi(2);
                let product = self.sigma0 * self.tau0 * bound;
                if product < 1.0 {
                    Ok((self.sigma0, self.tau0))
                } else {
                    let shrink = (0.99 / product).sqrt();
                    Ok((self.sigma0 * shrink, self.tau0 * shrink))
                }
            }
        }
    }
}

/// `Δ₁(u) / max(‖u‖₁, zero_guard)`.
pub fn ratio(k: &NormalizedGradient<'_>, u: &[f64], zero_guard: f64) -> Result<f64> {
    let tv = k.total_variation(u)?;
    Ok(tv / l1(u).max(zero_guard))
}

pub(crate) fn l1(u: &[f64]) -> f64 {
    u.iter().map(|x| x.abs()).sum()
}

/// Per-class ratios of a class-major state.
pub fn class_ratios(k: &NormalizedGradient<'_>, u: &Array2<f64>, zero_guard: f64) -> Vec<f64> {
    u.rows()
        .into_iter()
        .map(|row| {
            let row = row.as_slice().expect("class rows are contiguous");
            k.total_variation_unchecked(row) / l1(row).max(zero_guard)
        })
        .collect()
}

/// Argmax labels and the final scores.
#[derive(Debug, Clone, PartialEq)]
pub struct Prediction {
    pub labels: Vec<usize>,
    /// Node-major scores, shape `(n, classes)`.
    pub scores: Array2<f64>,
    /// Set when the two largest scores of a node differ by less than `1e-12`.
    pub ties: Vec<bool>,
}

pub const TIE_TOLERANCE: f64 = 1e-12;

impl Prediction {
    /// Labels from node-major scores; ties go to the smallest class index.
    pub fn from_scores(scores: Array2<f64>) -> Self {
        let mut labels = Vec::with_capacity(scores.nrows());
        let mut ties = Vec::with_capacity(scores.nrows());
        for row in scores.rows() {
            let mut best = 0;
            for (k, &s) in row.iter().enumerate() {
                if s > row[best] {
                    best = k;
                }
            }
            let runner_up = row
                .iter()
                .enumerate()
                .filter(|&(k, _)| k != best)
                .map(|(_, &s)| s)
                .fold(f64::NEG_INFINITY, f64::max);
            labels.push(best);
            ties.push(row[best] - runner_up < TIE_TOLERANCE);
        }
        Self {
            labels,
            scores,
            ties,
        }
    }

    pub fn num_classes(&self) -> usize {
        self.scores.ncols()
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SolveTrace {
    pub initial_ratios: Vec<f64>,
    pub records: Vec<OuterRecord>,
    pub converged: bool,
    /// The `(σ₀, τ₀)` actually used after the step rule.
    pub steps: (f64, f64),
}

impl SolveTrace {
    /// Sum of ratios after each outer step, preceded by the initial sum.
    pub fn ratio_sums(&self) -> Vec<f64> {
        std::iter::once(self.initial_ratios.iter().sum())
            .chain(self.records.iter().map(|r| r.ratio_sum))
            .collect()
    }
}

/// Runs the full outer iteration and returns argmax labels.
///
/// Converges when the sum of class ratios changes by less than `outer_tol`
/// between outer steps; otherwise stops after `outer_max` steps with
/// `trace.converged == false`.
pub fn solve(graph: &Graph, constraints: &LabelConstraints, config: &SolverConfig) -> Result<(Prediction, SolveTrace)> {
    let k = graph.gradient();
    let steps = config.resolved_steps(&k)?;
    let mut effective = *config;
    effective.sigma0 = steps.0;
    effective.tau0 = steps.1;

    let mut state = initialize_state(graph, constraints, config)?;
    let view = primal_dual::shifted_view(&state.u, graph.degrees(), config.shift)?;
    let mut trace = SolveTrace {
        initial_ratios: class_ratios(&k, &view, config.zero_guard),
        steps,
        ..Default::default()
    };
    let mut previous: f64 = trace.initial_ratios.iter().sum();
    for outer in 0..config.outer_max {
        let started = Instant::now();
        let mut record = match outer_step(&mut state, &k, constraints, &effective) {
            Ok(r) => r,
            Err(source) => {
                return Err(SolverError::Aborted {
                    outer,
                    source: Box::new(source),
                    trace: Box::new(trace),
                })
            }
        };
        record.wall_ms = started.elapsed().as_secs_f64() * 1e3;
        let change = (record.ratio_sum - previous).abs();
        previous = record.ratio_sum;
        log::debug!(
            "outer {outer}: ratio sum {:.6e}, inner {} iters, residual {:.2e}",
            record.ratio_sum,
            record.inner_iters,
            record.residual
        );
        trace.records.push(record);
        if change < config.outer_tol {
            if outer == 0 {
                log::warn!("no progress: ratios unchanged after the first outer step");
            }
            trace.converged = true;
            break;
        }
    }
    if !trace.converged {
        log::warn!("outer loop stopped at outer_max = {}", config.outer_max);
    }
    let prediction = Prediction::from_scores(state.u.t().to_owned());
    Ok((prediction, trace))
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn ratio_examples() {
        let g = Graph::from_edges(2, [(0, 1, 1.0)]).unwrap();
        let k = g.gradient();
        assert_eq!(ratio(&k, &[1.0, -1.0], 1e-12).unwrap(), 1.0);
        assert_eq!(ratio(&k, g.degrees(), 1e-12).unwrap(), 0.0);
        let p = Graph::from_edges(3, [(0, 1, 1.0), (1, 2, 2.0)]).unwrap();
        let kp = p.gradient();
        let u = [0.3, -1.2, 0.7];
        let u3: Vec<f64> = u.iter().map(|x| 3.0 * x).collect();
        let (a, b) = (ratio(&kp, &u, 1e-12).unwrap(), ratio(&kp, &u3, 1e-12).unwrap());
        assert!((a - b).abs() <= 1e-12 * a);
        // zero vector hits the guard instead of dividing by zero
        assert_eq!(ratio(&kp, &[0.0; 3], 1e-12).unwrap(), 0.0);
    }

    #[test]
    fn argmax_ties_go_to_smallest_class() {
        let p = Prediction::from_scores(array![[0.2, 0.5, 0.1], [0.3, 0.3, -0.6], [-1.0, 0.0, 1.0]]);
        assert_eq!(p.labels, vec![1, 0, 2]);
        assert_eq!(p.ties, vec![false, true, false]);
    }

    #[test]
    fn config_validation() {
        assert!(SolverConfig::default().validate().is_ok());
        let bad = SolverConfig {
            sigma0: 2.0,
            tau0: 2.0,
            step_rule: StepRule::Paper,
            ..Default::default()
        };
        assert!(matches!(bad.validate(), Err(SolverError::InvalidConfig(_))));
        let safeguarded = SolverConfig {
            step_rule: StepRule::Safeguarded,
            ..bad
        };
        assert!(safeguarded.validate().is_ok());
        let bad_dt = SolverConfig {
            dt: 0.0,
            ..Default::default()
        };
        assert!(bad_dt.validate().is_err());
    }

    #[test]
    fn safeguarded_steps_respect_operator_norm() {
        let g = Graph::from_edges(3, [(0, 1, 1.0), (1, 2, 1.0)]).unwrap();
        let k = g.gradient();
        let cfg = SolverConfig {
            step_rule: StepRule::Safeguarded,
            ..Default::default()
        };
        let (s, t) = cfg.resolved_steps(&k).unwrap();
        let norm = k.operator_norm(10_000, 1e-12, 1).unwrap().estimate;
        assert!(s * t * norm * norm < 1.0);
        assert!((s / t - 1.0).abs() < 1e-12);
    }

    #[test]
    fn acceleration_factors() {
        assert!((Acceleration::Paper.gamma(3.0, 1.0) - 0.5).abs() < 1e-15);
        assert!((Acceleration::Standard.gamma(1.5, 1.0) - 0.5).abs() < 1e-15);
    }
}
