//! The normalized gradient `K`, its adjoint, total variation and the
//! operator norm on a small path graph.
//!
//! ```bash
//! cargo run --example operators
//! ```

use graphssl::graph::{Graph, DEFAULT_NORM_SEED};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let path = Graph::from_edges(3, [(0, 1, 1.0), (1, 2, 1.0)])?;
    let k = path.gradient();
    let u = [1.0, 0.0, -1.0];
    println!("degrees      {:?}", path.degrees());
    println!("K u          {:?}", k.apply(&u)?);
    println!("K^T (1, 1)   {:?}", k.adjoint(&[1.0, 1.0])?);
    println!("TV(u)        {}", k.total_variation(&u)?);
    println!("TV(degrees)  {}", k.total_variation(path.degrees())?);

    let z = [0.3, -2.0];
    let lhs: f64 = k.apply(&u)?.iter().zip(&z).map(|(a, b)| a * b).sum();
    let rhs: f64 = u.iter().zip(k.adjoint(&z)?).map(|(a, b)| a * b).sum();
    println!("<Ku, z> = {lhs}, <u, K^T z> = {rhs}");

    let norm = k.operator_norm(1000, 1e-12, DEFAULT_NORM_SEED)?;
    println!("||K|| ≈ {:.12} after {} iterations", norm.estimate, norm.iterations);
    Ok(())
}
