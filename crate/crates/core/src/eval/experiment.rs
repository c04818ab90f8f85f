use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{evaluate, EvalError, Result};
use crate::datasets::stratified_partition;
use crate::graph::Graph;
use crate::solver::{solve, SolverConfig};

/// A grid of labeled fractions and partition seeds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSpec {
    pub fractions: Vec<f64>,
    pub seeds: Vec<u64>,
    pub epsilon: f64,
    pub solver: SolverConfig,
    /// Worker threads for independent cells.
    pub jobs: usize,
}

impl ExperimentSpec {
    pub fn validate(&self) -> Result<()> {
        if self.fractions.is_empty() {
            return Err(EvalError::InvalidExperiment("no fractions given".into()));
        }
        if self.seeds.is_empty() {
            return Err(EvalError::InvalidExperiment("no seeds given".into()));
        }
        if let Some(f) = self.fractions.iter().find(|f| !(**f > 0.0 && **f <= 1.0)) {
            return Err(EvalError::InvalidExperiment(format!("fraction {f} outside (0, 1]")));
        }
        if self.jobs == 0 {
            return Err(EvalError::InvalidExperiment("jobs must be at least 1".into()));
        }
        Ok(())
    }
}

/// One (fraction, seed) run. Failed cells keep `error` and leave the
/// metrics empty.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentCell {
    pub fraction: f64,
    pub seed: u64,
    pub accuracy: Option<f64>,
    pub auc_per_class: Vec<Option<f64>>,
    pub auc_mean: Option<f64>,
    pub n_eval: usize,
    pub outer_iterations: usize,
    pub converged: bool,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FractionSummary {
    pub fraction: f64,
    /// Successful cells contributing to the statistics.
    pub cells: usize,
    pub accuracy_mean: f64,
    /// Sample standard deviation (0 for a single cell).
    pub accuracy_std: f64,
    pub auc_mean: f64,
    pub auc_std: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub cells: Vec<ExperimentCell>,
    pub summary: Vec<FractionSummary>,
}

impl ExperimentReport {
    /// Whether mean accuracy never drops as the labeled fraction grows.
    pub fn accuracy_non_decreasing(&self) -> bool {
        let mut rows: Vec<&FractionSummary> = self.summary.iter().collect();
        rows.sort_by(|a, b| a.fraction.total_cmp(&b.fraction));
        rows.windows(2).all(|w| w[1].accuracy_mean >= w[0].accuracy_mean)
    }
}

/// Partition, solve and evaluate every `(fraction, seed)` cell on a fixed
/// graph. Cells are independent; their order in the report follows the
/// input grid regardless of `jobs`.
pub fn stability_experiment(graph: &Graph, truth: &[usize], spec: &ExperimentSpec) -> Result<ExperimentReport> {
    spec.validate()?;
    if truth.len() != graph.n() {
        return Err(EvalError::ShapeMismatch(format!(
            "{} truth labels for a graph with {} nodes",
            truth.len(),
            graph.n()
        )));
    }
    let grid: Vec<(f64, u64)> = spec
        .fractions
        .iter()
        .flat_map(|&f| spec.seeds.iter().map(move |&s| (f, s)))
        .collect();

    let run = |&(fraction, seed): &(f64, u64)| run_cell(graph, truth, spec, fraction, seed);
    let cells: Vec<ExperimentCell> = if spec.jobs == 1 {
        grid.iter().map(run).collect()
    } else {
        rayon::ThreadPoolBuilder::new()
            .num_threads(spec.jobs)
            .build()
            .map_err(|e| EvalError::InvalidExperiment(e.to_string()))?
            .install(|| grid.par_iter().map(run).collect())
    };

    let summary = spec
        .fractions
        .iter()
        .map(|&fraction| summarize(fraction, cells.iter().filter(|c| c.fraction == fraction)))
        .collect();
    let report = ExperimentReport { cells, summary };
    if !report.accuracy_non_decreasing() {
        log::warn!("mean accuracy is not monotone in the labeled fraction");
    }
    Ok(report)
}

fn run_cell(graph: &Graph, truth: &[usize], spec: &ExperimentSpec, fraction: f64, seed: u64) -> ExperimentCell {
    let mut cell = ExperimentCell {
        fraction,
        seed,
        accuracy: None,
        auc_per_class: Vec::new(),
        auc_mean: None,
        n_eval: 0,
        outer_iterations: 0,
        converged: false,
        error: None,
    };
    let outcome = (|| -> std::result::Result<(), String> {
        let partition = stratified_partition(truth, fraction, seed).map_err(|e| e.to_string())?;
        let constraints = partition
            .constraints(graph.n(), spec.epsilon)
            .map_err(|e| e.to_string())?;
        let config = SolverConfig {
            seed,
            ..spec.solver
        };
        let (prediction, trace) = solve(graph, &constraints, &config).map_err(|e| e.to_string())?;
        cell.outer_iterations = trace.records.len();
        cell.converged = trace.converged;
        let report = evaluate(&prediction, truth, &constraints).map_err(|e| e.to_string())?;
        cell.accuracy = Some(report.accuracy);
        cell.auc_mean = Some(report.average_auc).filter(|a| a.is_finite());
        cell.auc_per_class = report.per_class_auc;
        cell.n_eval = report.n_eval;
        Ok(())
    })();
    if let Err(message) = outcome {
        log::error!("cell fraction={fraction} seed={seed} failed: {message}");
        cell.error = Some(message);
    }
    cell
}

fn summarize<'a>(fraction: f64, cells: impl Iterator<Item = &'a ExperimentCell>) -> FractionSummary {
    let ok: Vec<&ExperimentCell> = cells.filter(|c| c.accuracy.is_some()).collect();
    let acc: Vec<f64> = ok.iter().filter_map(|c| c.accuracy).collect();
    let auc: Vec<f64> = ok.iter().filter_map(|c| c.auc_mean).collect();
    let (accuracy_mean, accuracy_std) = mean_std(&acc);
    let (auc_mean, auc_std) = mean_std(&auc);
    FractionSummary {
        fraction,
        cells: ok.len(),
        accuracy_mean,
        accuracy_std,
        auc_mean,
        auc_std,
    }
}

/// Mean and sample standard deviation.
pub(crate) fn mean_std(xs: &[f64]) -> (f64, f64) {
    if xs.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() == 1 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

pub fn write_report_json(path: impl AsRef<Path>, report: &ExperimentReport) -> std::io::Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    serde_json::to_writer_pretty(&mut w, report)?;
    writeln!(w)?;
    w.flush()
}

/// One row per cell: `fraction,seed,accuracy,auc_mean,auc_0..auc_{L-1},n_eval,converged,error`.
pub fn write_report_csv(path: impl AsRef<Path>, report: &ExperimentReport) -> std::io::Result<()> {
    let classes = report.cells.iter().map(|c| c.auc_per_class.len()).max().unwrap_or(0);
    let mut w = BufWriter::new(File::create(path)?);
    let auc_cols: Vec<String> = (0..classes).map(|k| format!("auc_{k}")).collect();
    let mut header = vec!["fraction", "seed", "accuracy", "auc_mean"];
    header.extend(auc_cols.iter().map(String::as_str));
    header.extend(["n_eval", "converged", "error"]);
    writeln!(w, "{}", header.join(","))?;
    let opt = |x: Option<f64>| x.map_or(String::new(), |v| v.to_string());
    for c in &report.cells {
        let mut row = vec![c.fraction.to_string(), c.seed.to_string(), opt(c.accuracy), opt(c.auc_mean)];
        row.extend((0..classes).map(|k| opt(c.auc_per_class.get(k).copied().flatten())));
        row.push(c.n_eval.to_string());
        row.push(c.converged.to_string());
        row.push(c.error.as_deref().unwrap_or("").replace([',', '\n'], ";"));
        writeln!(w, "{}", row.join(","))?;
    }
    w.flush()
}
