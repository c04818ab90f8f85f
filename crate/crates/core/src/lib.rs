//! # graphssl
//!
//! Transductive multi-class classification on graphs with very few labels.
//!
//! Nodes are items (images, documents, samples) connected by a k-NN
//! similarity graph. A handful of nodes carry class seeds; every other node
//! is labeled by minimizing, per class, the ratio between the normalized
//! graph total variation and the ℓ₁ norm of a node function, subject to seed
//! margins and a zero-sum coupling across classes. The label of a node is
//! the class with the largest score.
//!
//! ## Modules
//!
//! - [`graph`]: CSR graphs, exact k-NN construction, the normalized
//!   gradient/divergence pair and the `GXG1` binary cache.
//! - [`solver`]: constraint projection, the accelerated primal-dual inner
//!   loop, the ratio-decreasing outer loop and argmax labeling.
//! - [`datasets`]: CSV ingestion, two-moons and SBM generators, stratified
//!   partitions.
//! - [`eval`]: one-vs-rest AUC, accuracy, partition sweeps and a p=2
//!   label-spreading baseline.
//! - [`cli`]: the `graphssl` command-line front end.
//!
//! ## Running the examples
//!
//! ```bash
//! cargo run --release --example two_moons
//! cargo run --release --example sbm_communities
//! cargo run --release --example stability_sweep
//! ```
//!
//! ## Quick start
//!
//! ```
//! use graphssl::datasets::synth_sbm;
//! use graphssl::solver::{solve, LabelConstraints, SolverConfig};
//!
//! let (graph, truth) = synth_sbm(&[10, 10], 0.8, 0.02, 7).unwrap();
//! let seeds = LabelConstraints::new(20, vec![vec![0], vec![10]], 0.1).unwrap();
//! let (prediction, _trace) = solve(&graph, &seeds, &SolverConfig::default()).unwrap();
//! let correct = prediction.labels.iter().zip(&truth).filter(|(a, b)| a == b).count();
//! assert!(correct >= 18);
//! ```

pub mod cli;
pub mod datasets;
pub mod eval;
pub mod graph;
pub mod solver;
