//! The p=2 label-spreading baseline alone, over a range of α.
//!
//! ```bash
//! cargo run --release --example label_spreading_baseline
//! ```

use graphssl::datasets::{stratified_partition, synth_two_moons};
use graphssl::eval::{baseline_label_spreading, evaluate};
use graphssl::graph::{build_knn_graph, KernelSpec};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let data = synth_two_moons(500, 0.1, 1)?;
    let graph = build_knn_graph(&data.features, &KernelSpec::default())?;
    let partition = stratified_partition(&data.truth, 0.02, 1)?;
    let constraints = partition.constraints(graph.n(), 0.1)?;
    for alpha in [0.5, 0.9, 0.99, 0.999] {
        let prediction = baseline_label_spreading(&graph, &constraints, alpha, 100_000, 1e-10)?;
        let report = evaluate(&prediction, &data.truth, &constraints)?;
        println!("alpha {alpha:<6} accuracy {:.3}, AUC {:.3}", report.accuracy, report.average_auc);
    }
    Ok(())
}
