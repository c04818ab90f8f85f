//! One-vs-rest AUC and accuracy on held-out nodes, partition sweeps, and a
//! p=2 label-spreading baseline.

mod auc;
mod baseline;
mod experiment;

pub use auc::roc_auc;
pub use baseline::baseline_label_spreading;
pub use experiment::{
    stability_experiment, write_report_csv, write_report_json, ExperimentCell, ExperimentReport, ExperimentSpec,
    FractionSummary,
};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::solver::{LabelConstraints, Prediction};

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("degenerate class: {positives} positives, {negatives} negatives")]
    DegenerateClass { positives: usize, negatives: usize },
    #[error("no held-out nodes to evaluate")]
    EmptyEvaluation,
    #[error("invalid experiment: {0}")]
    InvalidExperiment(String),
    #[error("label spreading did not converge after {iters} iterations")]
    NoConvergence { iters: usize, last: Box<Prediction> },
}

pub type Result<T> = std::result::Result<T, EvalError>;

/// Metrics over the non-seed nodes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    /// One-vs-rest AUC per class; `None` when the class has no positives or
    /// no negatives among the evaluated nodes.
    pub per_class_auc: Vec<Option<f64>>,
    /// Mean over the classes with a defined AUC.
    pub average_auc: f64,
    pub accuracy: f64,
    pub n_eval: usize,
}

/// Scores class `k` by the `k`-th score column and accuracy by the argmax
/// label, both restricted to nodes that are not seeds.
pub fn evaluate(prediction: &Prediction, truth: &[usize], constraints: &LabelConstraints) -> Result<EvalReport> {
    let n = prediction.labels.len();
    if constraints.n() != n {
        return Err(EvalError::ShapeMismatch(format!(
            "prediction covers {n} nodes, constraints {}",
            constraints.n()
        )));
    }
    let excluded: Vec<usize> = (0..n).filter(|&i| constraints.is_seed(i)).collect();
    evaluate_excluding(prediction, truth, &excluded)
}

/// Same metrics as [`evaluate`] over every node not listed in `excluded`.
pub fn evaluate_excluding(prediction: &Prediction, truth: &[usize], excluded: &[usize]) -> Result<EvalReport> {
    let n = prediction.labels.len();
    if truth.len() != n || prediction.scores.nrows() != n {
        return Err(EvalError::ShapeMismatch(format!(
            "prediction covers {n} nodes, truth {}",
            truth.len()
        )));
    }
    let classes = prediction.num_classes();
    if let Some(&c) = truth.iter().find(|&&c| c >= classes) {
        return Err(EvalError::ShapeMismatch(format!(
            "truth class {c} outside the {classes} score columns"
        )));
    }
    let mut skip = vec![false; n];
    for &i in excluded {
        if i >= n {
            return Err(EvalError::ShapeMismatch(format!("excluded node {i} out of range (n = {n})")));
        }
        skip[i] = true;
    }
    let eval_nodes: Vec<usize> = (0..n).filter(|&i| !skip[i]).collect();
    if eval_nodes.is_empty() {
        return Err(EvalError::EmptyEvaluation);
    }

    let correct = eval_nodes
        .iter()
        .filter(|&&i| prediction.labels[i] == truth[i])
        .count();
    let mut per_class_auc = Vec::with_capacity(classes);
    for k in 0..classes {
        let scores: Vec<f64> = eval_nodes.iter().map(|&i| prediction.scores[[i, k]]).collect();
        let positives: Vec<bool> = eval_nodes.iter().map(|&i| truth[i] == k).collect();
        match roc_auc(&scores, &positives) {
            Ok(a) => per_class_auc.push(Some(a)),
            Err(EvalError::DegenerateClass { positives, negatives }) => {
                log::warn!(
                    "class {k} has {positives} positives and {negatives} negatives among held-out nodes; AUC excluded"
                );
                per_class_auc.push(None);
            }
            Err(e) => return Err(e),
        }
    }
    let defined: Vec<f64> = per_class_auc.iter().flatten().copied().collect();
    let average_auc = if defined.is_empty() {
        f64::NAN
    } else {
        defined.iter().sum::<f64>() / defined.len() as f64
    };
    Ok(EvalReport {
        per_class_auc,
        average_auc,
        accuracy: correct as f64 / eval_nodes.len() as f64,
        n_eval: eval_nodes.len(),
    })
}
