//! Feature/label ingestion, synthetic benchmarks and stratified partitions.

mod io;
mod partition;
mod synth;

pub use io::{
    load_dataset, load_features_csv, load_labels_csv, load_seed_labels_csv, write_features_csv, write_labels_csv,
};
pub use partition::{make_partition, stratified_partition, Partition};
pub use synth::{synth_sbm, synth_two_moons, SBM_MAX_ATTEMPTS};

use thiserror::Error;

use crate::graph::{FeatureMatrix, GraphError};

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("line {line}: {message}")]
    Parse { line: u64, message: String },
    #[error("line {line}: non-finite value")]
    NonFiniteValue { line: u64 },
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("labeled fraction {fraction} gives fewer than one seed per class (n = {n}, classes = {classes})")]
    FractionTooSmall { fraction: f64, n: usize, classes: usize },
    #[error("invalid {name}: {message}")]
    InvalidParameter { name: &'static str, message: String },
    #[error("no graph without isolated nodes after {attempts} attempts")]
    GenerationFailed { attempts: usize },
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, DatasetError>;

/// Features with ground-truth classes for every node.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledDataset {
    pub name: String,
    pub features: FeatureMatrix,
    pub truth: Vec<usize>,
    classes: usize,
}

impl LabeledDataset {
    /// The class count is `max(truth) + 1`; every class must occur.
    pub fn new(name: impl Into<String>, features: FeatureMatrix, truth: Vec<usize>) -> Result<Self> {
        if truth.len() != features.n() {
            return Err(DatasetError::ShapeMismatch(format!(
                "{} labels for {} feature rows",
                truth.len(),
                features.n()
            )));
        }
        let classes = count_classes(&truth)?;
        Ok(Self {
            name: name.into(),
            features,
            truth,
            classes,
        })
    }

    pub fn n(&self) -> usize {
        self.truth.len()
    }

    pub fn num_classes(&self) -> usize {
        self.classes
    }
}

/// `max + 1`, rejecting labelings where some class in between is missing.
pub(crate) fn count_classes(truth: &[usize]) -> Result<usize> {
    let classes = truth.iter().max().map_or(0, |m| m + 1);
    let mut seen = vec![false; classes];
    truth.iter().for_each(|&c| seen[c] = true);
    if let Some(k) = seen.iter().position(|s| !s) {
        return Err(DatasetError::ShapeMismatch(format!("class {k} never occurs in the truth")));
    }
    Ok(classes)
}
