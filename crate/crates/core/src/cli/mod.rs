//! Command-line front end.
//!
//! Every command resolves a [`RunConfig`]: the file passed with `--config`
//! (or the defaults), then the command-line flags on top. The resolved
//! config is written next to the command's main output as
//! `<stem>.config.json`, and passing that file back with `--config`
//! reproduces the run.
//!
//! Exit codes: 0 success, 2 usage or validation error, 3 the outer loop hit
//! `outer_max` (outputs are still written), 4 numerical failure.

use std::ffi::OsString;
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use csv::{ReaderBuilder, Trim};
use ndarray::Array2;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::datasets::{
    load_features_csv, load_labels_csv, load_seed_labels_csv, synth_sbm, synth_two_moons, write_features_csv,
    write_labels_csv,
};
use crate::eval::{evaluate_excluding, stability_experiment, write_report_csv, write_report_json, ExperimentSpec};
use crate::graph::{
    build_knn_graph, read_graph_file, write_graph_file, Bandwidth, Kernel, KernelSpec, Metric, Symmetrization,
};
use crate::solver::{
    solve, Acceleration, InitRule, LabelConstraints, OuterRecord, Prediction, ShiftRule, SolverConfig, SolverError,
    StepRule,
};

pub const CONFIG_VERSION: &str = concat!("graphssl/", env!("CARGO_PKG_VERSION"));

/// Environment variable holding the log level.
pub const LOG_ENV: &str = "GRAPHX_LOG";

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("outer loop reached outer_max = {0} without converging")]
    NotConverged(usize),
    #[error("numerical failure: {0}")]
    Numerical(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::NotConverged(_) => 3,
            CliError::Numerical(_) => 4,
        }
    }
}

pub type Result<T> = std::result::Result<T, CliError>;

fn usage(e: impl std::fmt::Display) -> CliError {
    CliError::Usage(e.to_string())
}

fn at(path: &Path) -> impl Fn(std::io::Error) -> CliError + '_ {
    move |e| usage(format!("{}: {e}", path.display()))
}

/// Everything a run depends on besides its input files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub version: String,
    pub synth: SynthConfig,
    pub kernel: KernelSpec,
    pub solver: SolverConfig,
    /// Seed margin of the label constraints.
    pub epsilon: f64,
    /// Number of classes; taken from the labels file when absent.
    pub classes: Option<usize>,
    pub experiment: ExperimentParams,
    pub paths: Paths,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            version: CONFIG_VERSION.into(),
            synth: SynthConfig::default(),
            kernel: KernelSpec::default(),
            solver: SolverConfig::default(),
            epsilon: 0.1,
            classes: None,
            experiment: ExperimentParams::default(),
            paths: Paths::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SynthConfig {
    pub n: usize,
    pub noise: f64,
    pub sizes: Vec<usize>,
    pub p_in: f64,
    pub p_out: f64,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            n: 500,
            noise: 0.1,
            sizes: vec![50, 50],
            p_in: 0.5,
            p_out: 0.02,
            seed: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentParams {
    pub fractions: Vec<f64>,
    pub seeds: Vec<u64>,
    pub jobs: usize,
}

impl Default for ExperimentParams {
    fn default() -> Self {
        Self {
            fractions: vec![0.02, 0.05, 0.10, 0.15, 0.20],
            seeds: vec![1, 2, 3],
            jobs: 1,
        }
    }
}

/// Input and output files. Each command reads the roles it needs.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Paths {
    pub features: Option<PathBuf>,
    pub truth: Option<PathBuf>,
    pub graph: Option<PathBuf>,
    pub labels: Option<PathBuf>,
    pub scores: Option<PathBuf>,
    pub trace: Option<PathBuf>,
    pub report: Option<PathBuf>,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(at(path))?;
        let config: RunConfig = serde_json::from_str(&text).map_err(|e| usage(format!("{}: {e}", path.display())))?;
        if config.version != CONFIG_VERSION {
            log::warn!("config was written by {}, running {CONFIG_VERSION}", config.version);
        }
        Ok(config)
    }

    fn load_or_default(path: Option<&Path>) -> Result<Self> {
        path.map_or_else(|| Ok(Self::default()), Self::load)
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("config serializes");
        s.push('\n');
        s
    }

    /// Writes the config as `<stem>.config.json` next to `output`.
    pub fn write_beside(&self, output: &Path) -> Result<PathBuf> {
        let path = config_path_for(output);
        let mut resolved = self.clone();
        resolved.version = CONFIG_VERSION.into();
        fs::write(&path, resolved.to_json()).map_err(at(&path))?;
        Ok(path)
    }
}

pub fn config_path_for(output: &Path) -> PathBuf {
    output.with_extension("config.json")
}

fn required<'a>(path: &'a Option<PathBuf>, flag: &str) -> Result<&'a Path> {
    path.as_deref()
        .ok_or_else(|| usage(format!("missing --{flag} (or the matching entry under \"paths\" in --config)")))
}

fn set<T>(slot: &mut T, flag: Option<T>) {
    if let Some(v) = flag {
        *slot = v;
    }
}

fn set_path(slot: &mut Option<PathBuf>, flag: &Option<PathBuf>) {
    if flag.is_some() {
        slot.clone_from(flag);
    }
}

/// Parses a lowercase enum name through its serde representation.
fn parse_enum<T: DeserializeOwned>(s: &str) -> std::result::Result<T, String> {
    serde_json::from_value(serde_json::Value::String(s.to_ascii_lowercase())).map_err(|e| e.to_string())
}

#[derive(Debug, Parser)]
#[command(name = "graphssl", version, about = "Graph-based transductive classification from very few labels")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a synthetic dataset.
    Synth {
        #[command(subcommand)]
        model: SynthModel,
    },
    /// Build a k-NN similarity graph from a features CSV.
    BuildGraph(BuildGraphArgs),
    /// Label every node of a graph from a seed file.
    Solve(SolveArgs),
    /// Score a scores CSV against ground truth.
    Eval(EvalArgs),
    /// Sweep labeled fractions and partition seeds on one graph.
    Experiment(ExperimentArgs),
}

#[derive(Debug, Subcommand)]
pub enum SynthModel {
    /// Two interleaved half circles with Gaussian noise.
    TwoMoons(TwoMoonsArgs),
    /// Stochastic block model with unit weights.
    Sbm(SbmArgs),
}

#[derive(Debug, Args)]
pub struct TwoMoonsArgs {
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub noise: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub out_features: Option<PathBuf>,
    #[arg(long)]
    pub out_truth: Option<PathBuf>,
    #[arg(long)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SbmArgs {
    /// Block sizes, comma separated.
    #[arg(long, value_delimiter = ',')]
    pub sizes: Option<Vec<usize>>,
    #[arg(long)]
    pub p_in: Option<f64>,
    #[arg(long)]
    pub p_out: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub out_graph: Option<PathBuf>,
    #[arg(long)]
    pub out_truth: Option<PathBuf>,
    #[arg(long)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct BuildGraphArgs {
    #[arg(long)]
    pub features: Option<PathBuf>,
    #[arg(long)]
    pub k: Option<usize>,
    /// euclidean | cosine
    #[arg(long, value_parser = parse_enum::<Metric>)]
    pub metric: Option<Metric>,
    /// gaussian | binary
    #[arg(long)]
    pub kernel: Option<String>,
    /// Gaussian bandwidth: a positive number or `auto`.
    #[arg(long)]
    pub sigma: Option<Bandwidth>,
    /// mean | max
    #[arg(long, value_parser = parse_enum::<Symmetrization>)]
    pub symmetrize: Option<Symmetrization>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SolveArgs {
    #[arg(long)]
    pub graph: Option<PathBuf>,
    /// Seed labels, header `node,class`.
    #[arg(long)]
    pub labels: Option<PathBuf>,
    #[arg(long)]
    pub classes: Option<usize>,
    #[arg(long)]
    pub epsilon: Option<f64>,
    #[arg(long)]
    pub dt: Option<f64>,
    #[arg(long)]
    pub sigma0: Option<f64>,
    #[arg(long)]
    pub tau0: Option<f64>,
    /// paper | safeguarded
    #[arg(long, value_parser = parse_enum::<StepRule>)]
    pub step_rule: Option<StepRule>,
    /// paper | standard
    #[arg(long, value_parser = parse_enum::<Acceleration>)]
    pub acceleration: Option<Acceleration>,
    /// degree | median
    #[arg(long, value_parser = parse_enum::<ShiftRule>)]
    pub shift: Option<ShiftRule>,
    /// diffusion | random
    #[arg(long, value_parser = parse_enum::<InitRule>)]
    pub init: Option<InitRule>,
    #[arg(long)]
    pub inner_max: Option<usize>,
    #[arg(long)]
    pub inner_tol: Option<f64>,
    #[arg(long)]
    pub outer_max: Option<usize>,
    #[arg(long)]
    pub outer_tol: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub out_scores: Option<PathBuf>,
    #[arg(long)]
    pub out_trace: Option<PathBuf>,
    #[arg(long)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[arg(long)]
    pub scores: Option<PathBuf>,
    #[arg(long)]
    pub truth: Option<PathBuf>,
    /// Seed labels to leave out of the metrics.
    #[arg(long)]
    pub labels: Option<PathBuf>,
    #[arg(long)]
    pub report: Option<PathBuf>,
    #[arg(long)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ExperimentArgs {
    #[arg(long)]
    pub graph: Option<PathBuf>,
    #[arg(long)]
    pub truth: Option<PathBuf>,
    #[arg(long, value_delimiter = ',')]
    pub fractions: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',')]
    pub seeds: Option<Vec<u64>>,
    #[arg(long)]
    pub epsilon: Option<f64>,
    /// Worker threads for independent cells.
    #[arg(long)]
    pub jobs: Option<usize>,
    /// JSON report; a CSV mirror is written with the `.csv` extension.
    #[arg(long)]
    pub report: Option<PathBuf>,
    #[arg(long)]
    pub config: Option<PathBuf>,
}

/// Installs the `GRAPHX_LOG`-controlled logger (default `warn`).
pub fn init_logging() {
    let env = env_logger::Env::new().filter_or(LOG_ENV, "warn");
    let _ = env_logger::Builder::from_env(env).format_timestamp(None).try_init();
}

/// Parses `args` (program name first), runs the command and returns the
/// process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match execute(&cli.command) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("graphssl: {e}");
            e.exit_code()
        }
    }
}

pub fn execute(command: &Command) -> Result<()> {
    match command {
        Command::Synth {
            model: SynthModel::TwoMoons(args),
        } => cmd_synth_two_moons(args),
        Command::Synth {
            model: SynthModel::Sbm(args),
        } => cmd_synth_sbm(args),
        Command::BuildGraph(args) => cmd_build_graph(args),
        Command::Solve(args) => cmd_solve(args),
        Command::Eval(args) => cmd_eval(args),
        Command::Experiment(args) => cmd_experiment(args),
    }
}

pub fn cmd_synth_two_moons(args: &TwoMoonsArgs) -> Result<()> {
    let mut cfg = RunConfig::load_or_default(args.config.as_deref())?;
    set(&mut cfg.synth.n, args.n);
    set(&mut cfg.synth.noise, args.noise);
    set(&mut cfg.synth.seed, args.seed);
    set_path(&mut cfg.paths.features, &args.out_features);
    set_path(&mut cfg.paths.truth, &args.out_truth);
    let features_path = required(&cfg.paths.features, "out-features")?;
    let truth_path = required(&cfg.paths.truth, "out-truth")?;

    let s = &cfg.synth;
    let data = synth_two_moons(s.n, s.noise, s.seed).map_err(usage)?;
    write_features_csv(features_path, &data.features).map_err(usage)?;
    write_labels_csv(truth_path, data.truth.iter().copied().enumerate()).map_err(usage)?;
    cfg.write_beside(features_path)?;
    println!("wrote {} points to {}", data.n(), features_path.display());
    Ok(())
}

pub fn cmd_synth_sbm(args: &SbmArgs) -> Result<()> {
    let mut cfg = RunConfig::load_or_default(args.config.as_deref())?;
    set(&mut cfg.synth.sizes, args.sizes.clone());
    set(&mut cfg.synth.p_in, args.p_in);
    set(&mut cfg.synth.p_out, args.p_out);
    set(&mut cfg.synth.seed, args.seed);
    set_path(&mut cfg.paths.graph, &args.out_graph);
    set_path(&mut cfg.paths.truth, &args.out_truth);
    let graph_path = required(&cfg.paths.graph, "out-graph")?;
    let truth_path = required(&cfg.paths.truth, "out-truth")?;

    let s = &cfg.synth;
    let (graph, truth) = synth_sbm(&s.sizes, s.p_in, s.p_out, s.seed).map_err(usage)?;
    write_graph_file(&graph, graph_path).map_err(usage)?;
    write_labels_csv(truth_path, truth.iter().copied().enumerate()).map_err(usage)?;
    cfg.write_beside(graph_path)?;
    println!("wrote {} nodes, {} edges to {}", graph.n(), graph.num_edges(), graph_path.display());
    Ok(())
}

pub fn cmd_build_graph(args: &BuildGraphArgs) -> Result<()> {
    let mut cfg = RunConfig::load_or_default(args.config.as_deref())?;
    set(&mut cfg.kernel.k, args.k);
    set(&mut cfg.kernel.metric, args.metric);
    set(&mut cfg.kernel.symmetrization, args.symmetrize);
    if let Some(name) = &args.kernel {
        cfg.kernel.kernel = match name.to_ascii_lowercase().as_str() {
            "binary" => Kernel::Binary,
            "gaussian" => match cfg.kernel.kernel {
                Kernel::Gaussian { sigma } => Kernel::Gaussian { sigma },
                Kernel::Binary => Kernel::Gaussian {
                    sigma: Bandwidth::Auto,
                },
            },
            other => return Err(usage(format!("unknown kernel {other:?} (expected gaussian or binary)"))),
        };
    }
    if let Some(sigma) = args.sigma {
        match &mut cfg.kernel.kernel {
            Kernel::Gaussian { sigma: s } => *s = sigma,
            Kernel::Binary => return Err(usage("--sigma only applies to the gaussian kernel")),
        }
    }
    set_path(&mut cfg.paths.features, &args.features);
    set_path(&mut cfg.paths.graph, &args.out);
    let features_path = required(&cfg.paths.features, "features")?;
    let graph_path = required(&cfg.paths.graph, "out")?;

    let features = load_features_csv(features_path).map_err(usage)?;
    cfg.kernel.validate(features.n()).map_err(usage)?;
    let graph = build_knn_graph(&features, &cfg.kernel).map_err(usage)?;
    write_graph_file(&graph, graph_path).map_err(usage)?;
    cfg.write_beside(graph_path)?;
    let (min, mean, max) = graph.degree_summary();
    println!("n = {}", graph.n());
    println!("edges = {}", graph.num_edges());
    println!("degree min/mean/max = {min:.6}/{mean:.6}/{max:.6}");
    Ok(())
}

pub fn cmd_solve(args: &SolveArgs) -> Result<()> {
    let mut cfg = RunConfig::load_or_default(args.config.as_deref())?;
    set(&mut cfg.epsilon, args.epsilon);
    if args.classes.is_some() {
        cfg.classes = args.classes;
    }
    let s = &mut cfg.solver;
    set(&mut s.dt, args.dt);
    set(&mut s.sigma0, args.sigma0);
    set(&mut s.tau0, args.tau0);
    set(&mut s.step_rule, args.step_rule);
    set(&mut s.acceleration, args.acceleration);
    set(&mut s.shift, args.shift);
    set(&mut s.init, args.init);
    set(&mut s.inner_max, args.inner_max);
    set(&mut s.inner_tol, args.inner_tol);
    set(&mut s.outer_max, args.outer_max);
    set(&mut s.outer_tol, args.outer_tol);
    set(&mut s.seed, args.seed);
    set_path(&mut cfg.paths.graph, &args.graph);
    set_path(&mut cfg.paths.labels, &args.labels);
    set_path(&mut cfg.paths.scores, &args.out_scores);
    set_path(&mut cfg.paths.trace, &args.out_trace);
    let graph_path = required(&cfg.paths.graph, "graph")?;
    let labels_path = required(&cfg.paths.labels, "labels")?;
    let scores_path = required(&cfg.paths.scores, "out-scores")?;
    cfg.solver.validate().map_err(usage)?;

    let graph = read_graph_file(graph_path).map_err(usage)?;
    let pairs = load_seed_labels_csv(labels_path).map_err(usage)?;
    let classes = match cfg.classes {
        Some(c) => c,
        None => pairs
            .iter()
            .map(|&(_, c)| c + 1)
            .max()
            .ok_or_else(|| usage(format!("{}: no seed labels", labels_path.display())))?,
    };
    let constraints = LabelConstraints::from_pairs(graph.n(), classes, &pairs, cfg.epsilon).map_err(usage)?;

    cfg.write_beside(scores_path)?;
    match solve(&graph, &constraints, &cfg.solver) {
        Ok((prediction, trace)) => {
            write_scores_csv(scores_path, &prediction)?;
            if let Some(path) = &cfg.paths.trace {
                write_trace_json(path, &trace.records)?;
            }
            let sums = trace.ratio_sums();
            log::info!(
                "{} outer steps, ratio sum {:.6e} -> {:.6e}",
                trace.records.len(),
                sums[0],
                sums[sums.len() - 1]
            );
            if trace.converged {
                Ok(())
            } else {
                Err(CliError::NotConverged(cfg.solver.outer_max))
            }
        }
        Err(SolverError::Aborted { outer, source, trace }) => {
            if let Some(path) = &cfg.paths.trace {
                write_trace_json(path, &trace.records)?;
            }
            let message = format!("outer step {outer}: {source}");
            Err(if source.is_numerical() {
                CliError::Numerical(message)
            } else {
                usage(message)
            })
        }
        Err(e) if e.is_numerical() => Err(CliError::Numerical(e.to_string())),
        Err(e) => Err(usage(e)),
    }
}

pub fn cmd_eval(args: &EvalArgs) -> Result<()> {
    let mut cfg = RunConfig::load_or_default(args.config.as_deref())?;
    set_path(&mut cfg.paths.scores, &args.scores);
    set_path(&mut cfg.paths.truth, &args.truth);
    set_path(&mut cfg.paths.labels, &args.labels);
    set_path(&mut cfg.paths.report, &args.report);
    let scores_path = required(&cfg.paths.scores, "scores")?;
    let truth_path = required(&cfg.paths.truth, "truth")?;
    let report_path = required(&cfg.paths.report, "report")?;

    let prediction = read_scores_csv(scores_path)?;
    let truth = load_labels_csv(truth_path).map_err(usage)?;
    let excluded: Vec<usize> = match &cfg.paths.labels {
        Some(path) => load_seed_labels_csv(path)
            .map_err(usage)?
            .into_iter()
            .map(|(node, _)| node)
            .collect(),
        None => Vec::new(),
    };
    let report = evaluate_excluding(&prediction, &truth, &excluded).map_err(usage)?;
    let mut w = BufWriter::new(File::create(report_path).map_err(at(report_path))?);
    serde_json::to_writer_pretty(&mut w, &report).map_err(usage)?;
    writeln!(w).and_then(|()| w.flush()).map_err(at(report_path))?;
    cfg.write_beside(report_path)?;
    println!("accuracy = {:.6}, mean AUC = {:.6}, evaluated nodes = {}", report.accuracy, report.average_auc, report.n_eval);
    Ok(())
}

pub fn cmd_experiment(args: &ExperimentArgs) -> Result<()> {
    let mut cfg = RunConfig::load_or_default(args.config.as_deref())?;
    set(&mut cfg.experiment.fractions, args.fractions.clone());
    set(&mut cfg.experiment.seeds, args.seeds.clone());
    set(&mut cfg.experiment.jobs, args.jobs);
    set(&mut cfg.epsilon, args.epsilon);
    set_path(&mut cfg.paths.graph, &args.graph);
    set_path(&mut cfg.paths.truth, &args.truth);
    set_path(&mut cfg.paths.report, &args.report);
    let graph_path = required(&cfg.paths.graph, "graph")?;
    let truth_path = required(&cfg.paths.truth, "truth")?;
    let report_path = required(&cfg.paths.report, "report")?;

    let spec = ExperimentSpec {
        fractions: cfg.experiment.fractions.clone(),
        seeds: cfg.experiment.seeds.clone(),
        epsilon: cfg.epsilon,
        solver: cfg.solver,
        jobs: cfg.experiment.jobs,
    };
    spec.validate().map_err(usage)?;
    cfg.solver.validate().map_err(usage)?;
    let graph = read_graph_file(graph_path).map_err(usage)?;
    let truth = load_labels_csv(truth_path).map_err(usage)?;
    let report = stability_experiment(&graph, &truth, &spec).map_err(usage)?;
    write_report_json(report_path, &report).map_err(at(report_path))?;
    let csv_path = report_path.with_extension("csv");
    write_report_csv(&csv_path, &report).map_err(at(&csv_path))?;
    cfg.write_beside(report_path)?;
    for row in &report.summary {
        println!(
            "fraction {:.4}: accuracy {:.4} ± {:.4}, AUC {:.4} ± {:.4} ({} cells)",
            row.fraction, row.accuracy_mean, row.accuracy_std, row.auc_mean, row.auc_std, row.cells
        );
    }
    Ok(())
}

/// Header `node,score_0,…,score_{L-1},label,tie`; scores in shortest
/// round-trip exponent form, `tie` as 0/1.
pub fn write_scores_csv(path: &Path, prediction: &Prediction) -> Result<()> {
    let mut w = BufWriter::new(File::create(path).map_err(at(path))?);
    let classes = prediction.num_classes();
    let mut header = vec!["node".to_string()];
    header.extend((0..classes).map(|k| format!("score_{k}")));
    header.extend(["label".to_string(), "tie".to_string()]);
    let mut out = header.join(",");
    out.push('\n');
    for (i, row) in prediction.scores.rows().into_iter().enumerate() {
        out.push_str(&i.to_string());
        for s in row {
            out.push_str(&format!(",{s:e}"));
        }
        out.push_str(&format!(",{},{}\n", prediction.labels[i], u8::from(prediction.ties[i])));
    }
    w.write_all(out.as_bytes())
        .and_then(|()| w.flush())
        .map_err(at(path))
}

/// Reads a scores CSV back. Labels are recomputed from the scores; every
/// node must appear exactly once.
pub fn read_scores_csv(path: &Path) -> Result<Prediction> {
    let file = File::open(path).map_err(at(path))?;
    let mut reader = ReaderBuilder::new().has_headers(true).trim(Trim::All).from_reader(file);
    let fail = |line: u64, message: String| usage(format!("{} line {line}: {message}", path.display()));
    let headers = reader.headers().map_err(|e| fail(1, e.to_string()))?.clone();
    let cols: Vec<&str> = headers.iter().collect();
    let classes = cols.len().saturating_sub(3);
    let expected: Vec<String> = std::iter::once("node".to_string())
        .chain((0..classes).map(|k| format!("score_{k}")))
        .chain(["label".to_string(), "tie".to_string()])
        .collect();
    if classes < 2 || cols != expected {
        return Err(fail(1, format!("expected header node,score_0,...,label,tie, found {:?}", headers.as_slice())));
    }

    let mut rows: Vec<(usize, Vec<f64>)> = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| fail(e.position().map_or(0, |p| p.line()), e.to_string()))?;
        let line = record.position().map_or(0, |p| p.line());
        let node: usize = record[0]
            .parse()
            .map_err(|_| fail(line, format!("node {:?} is not a non-negative integer", &record[0])))?;
        let mut scores = Vec::with_capacity(classes);
        for field in record.iter().skip(1).take(classes) {
            let x: f64 = field
                .parse()
                .map_err(|_| fail(line, format!("cannot parse {field:?} as a number")))?;
            if !x.is_finite() {
                return Err(fail(line, "non-finite score".into()));
            }
            scores.push(x);
        }
        rows.push((node, scores));
    }
    let n = rows.len();
    let mut matrix = Array2::<f64>::zeros((n, classes));
    let mut seen = vec![false; n];
    for (row, (node, scores)) in rows.into_iter().enumerate() {
        let line = row as u64 + 2;
        if node >= n || seen[node] {
            return Err(fail(line, format!("node {node} is out of range or repeated ({n} rows)")));
        }
        seen[node] = true;
        for (k, s) in scores.into_iter().enumerate() {
            matrix[[node, k]] = s;
        }
    }
    Ok(Prediction::from_scores(matrix))
}

/// Writes the outer records as a JSON array.
pub fn write_trace_json(path: &Path, records: &[OuterRecord]) -> Result<()> {
    let mut w = BufWriter::new(File::create(path).map_err(at(path))?);
    serde_json::to_writer_pretty(&mut w, records).map_err(usage)?;
    writeln!(w).and_then(|()| w.flush()).map_err(at(path))
}
