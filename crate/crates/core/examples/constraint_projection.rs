//! Seed margins and the zero-sum coupling: projecting an arbitrary state
//! onto the feasible set.
//!
//! ```bash
//! cargo run --example constraint_projection
//! ```

use graphssl::solver::LabelConstraints;
use ndarray::array;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    // Five nodes, three classes; node 0 seeds class 0, node 1 class 1, node 2 class 2.
    let c = LabelConstraints::new(5, vec![vec![0], vec![1], vec![2]], 0.1)?;
    // Class-major: row k is the class-k function over the nodes.
    let mut u = array![
        [-0.5, 0.4, 0.9, 0.2, 1.0],
        [0.3, -0.2, 0.1, 0.5, -1.0],
        [0.7, 0.8, -0.6, -0.1, 0.5],
    ];
    println!("violation before: {:.3}", c.max_violation(&u));
    c.project(&mut u);
    println!("projected:\n{u:.3}");
    println!("violation after: {:e}", c.max_violation(&u));
    for i in c.unlabeled() {
        println!("node {i}: class sum {:e}", u.column(i).sum());
    }
    Ok(())
}
