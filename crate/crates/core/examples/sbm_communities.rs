//! Community detection on a stochastic block model from one seed per block.
//!
//! ```bash
//! cargo run --release --example sbm_communities
//! ```

use graphssl::datasets::synth_sbm;
use graphssl::eval::evaluate;
use graphssl::solver::{solve, LabelConstraints, SolverConfig};

fn run(sizes: &[usize], p_in: f64, p_out: f64, seed: u64) -> Result<(), Box<dyn std::error::Error>> {
    let (graph, truth) = synth_sbm(sizes, p_in, p_out, seed)?;
    // First node of each block is its seed.
    let mut start = 0;
    let seeds: Vec<Vec<usize>> = sizes
        .iter()
        .map(|&s| {
            let block = vec![start];
            start += s;
            block
        })
        .collect();
    let constraints = LabelConstraints::new(graph.n(), seeds, 0.1)?;
    let (prediction, trace) = solve(&graph, &constraints, &SolverConfig::default())?;
    let report = evaluate(&prediction, &truth, &constraints)?;
    println!(
        "sizes {sizes:?}, p_in {p_in}, p_out {p_out}: accuracy {:.3}, AUC {:.3}, {} outer steps{}",
        report.accuracy,
        report.average_auc,
        trace.records.len(),
        if trace.converged { "" } else { " (not converged)" }
    );
    Ok(())
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    run(&[50, 50], 0.5, 0.02, 3)?;
    run(&[40, 40], 0.3, 0.05, 11)?;
    run(&[20, 20, 20], 0.4, 0.05, 5)?;
    Ok(())
}
