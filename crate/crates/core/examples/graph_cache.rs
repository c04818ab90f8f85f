//! Building a graph once, caching it in the `GXG1` binary format and
//! solving several partitions against the cached copy.
//!
//! ```bash
//! cargo run --release --example graph_cache
//! ```

use graphssl::datasets::{stratified_partition, synth_two_moons};
use graphssl::eval::evaluate;
use graphssl::graph::{build_knn_graph, read_graph_file, write_graph_file, KernelSpec};
use graphssl::solver::{solve, SolverConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let data = synth_two_moons(400, 0.1, 9)?;
    let graph = build_knn_graph(&data.features, &KernelSpec::default())?;
    let path = std::env::temp_dir().join("graphssl-two-moons.gxg");
    write_graph_file(&graph, &path)?;
    println!("wrote {} ({} bytes)", path.display(), std::fs::metadata(&path)?.len());

    let cached = read_graph_file(&path)?;
    assert_eq!(cached, graph);
    for seed in 1..=3 {
        let constraints = stratified_partition(&data.truth, 0.05, seed)?.constraints(cached.n(), 0.1)?;
        let (prediction, _) = solve(&cached, &constraints, &SolverConfig::default())?;
        let report = evaluate(&prediction, &data.truth, &constraints)?;
        println!("partition {seed}: accuracy {:.3}", report.accuracy);
    }
    std::fs::remove_file(&path)?;
    Ok(())
}
