//! Oracles and fixtures shared by the integration tests. Nothing here calls
//! into the solver; everything is recomputed from first principles.
#![allow(dead_code)]

use graphssl::datasets::synth_sbm;
use graphssl::graph::Graph;
use graphssl::solver::LabelConstraints;
use nalgebra::{DMatrix, DVector};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Random weighted graph on `n` nodes: a spanning path (so no node is
/// isolated) plus each remaining pair with probability `p`.
pub fn random_graph(rng: &mut ChaCha8Rng, n: usize, p: f64) -> Graph {
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(rng);
    let mut pairs = Vec::new();
    let mut present = vec![vec![false; n]; n];
    for w in order.windows(2) {
        let (i, j) = (w[0].min(w[1]), w[0].max(w[1]));
        present[i][j] = true;
        pairs.push((i, j, rng.random_range(0.05..3.0)));
    }
    for i in 0..n {
        for j in i + 1..n {
            if !present[i][j] && rng.random::<f64>() < p {
                pairs.push((i, j, rng.random_range(0.05..3.0)));
            }
        }
    }
    Graph::from_edges(n, pairs).unwrap()
}

/// Dense weight matrix assembled from the CSR arrays.
pub fn dense_weights(g: &Graph) -> DMatrix<f64> {
    let n = g.n();
    let mut w = DMatrix::zeros(n, n);
    for i in 0..n {
        for (j, x) in g.neighbors(i) {
            w[(i, j)] = x;
        }
    }
    w
}

/// Dense `|E| × n` normalized gradient with rows in canonical edge order:
/// row `e = (i, j)` holds `w_ij / d_i` at column `i` and `-w_ij / d_j` at `j`.
pub fn dense_gradient(g: &Graph) -> DMatrix<f64> {
    let w = dense_weights(g);
    let n = g.n();
    let d: Vec<f64> = (0..n).map(|i| w.row(i).sum()).collect();
    let mut edges = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            if w[(i, j)] != 0.0 {
                edges.push((i, j));
            }
        }
    }
    let mut k = DMatrix::zeros(edges.len(), n);
    for (e, &(i, j)) in edges.iter().enumerate() {
        k[(e, i)] = w[(i, j)] / d[i];
        k[(e, j)] = -w[(i, j)] / d[j];
    }
    k
}

pub fn dense_tv(g: &Graph, u: &[f64]) -> f64 {
    let k = dense_gradient(g);
    (k * DVector::from_column_slice(u)).abs().sum()
}

/// Random SBM instance for the decrease check: L = 2 for even `inst`,
/// 3 for odd, one random seed per block, n ≤ 60.
pub fn sbm_decrease_instance(inst: u64) -> (Graph, Vec<usize>, LabelConstraints) {
    let mut r = rng(inst);
    let classes = if inst.is_multiple_of(2) { 2 } else { 3 };
    let size = r.random_range(8..=60 / classes);
    let p_in = r.random_range(0.3..0.8);
    let p_out = r.random_range(0.01..0.1);
    let sizes = vec![size; classes];
    let (graph, truth) = synth_sbm(&sizes, p_in, p_out, inst).unwrap();
    let seeds = (0..classes).map(|b| vec![b * size + r.random_range(0..size)]).collect();
    let constraints = LabelConstraints::new(graph.n(), seeds, 0.1).unwrap();
    (graph, truth, constraints)
}

/// Two equal blocks with identical degree everywhere: each block is a
/// `degree`-regular circulant (a clique when `degree = m - 1`), and a
/// perfect matching of weight `bridge` joins the blocks.
pub fn regular_two_blocks(m: usize, degree: usize, bridge: f64, seed: u64) -> (Graph, Vec<usize>) {
    assert!(degree < m && (degree.is_multiple_of(2) || m.is_multiple_of(2)));
    let mut pairs = Vec::new();
    for block in 0..2 {
        let base = block * m;
        let mut present = vec![vec![false; m]; m];
        let mut add = |a: usize, b: usize| {
            let (a, b) = (a.min(b), a.max(b));
            if a != b && !present[a][b] {
                present[a][b] = true;
                pairs.push((base + a, base + b, 1.0));
            }
        };
        for i in 0..m {
            for s in 1..=degree / 2 {
                add(i, (i + s) % m);
            }
            if !degree.is_multiple_of(2) {
                add(i, (i + m / 2) % m);
            }
        }
    }
    let mut matching: Vec<usize> = (0..m).collect();
    matching.shuffle(&mut rng(seed));
    for (i, &j) in matching.iter().enumerate() {
        pairs.push((i, m + j, bridge));
    }
    let truth = (0..2 * m).map(|i| usize::from(i >= m)).collect();
    (Graph::from_edges(2 * m, pairs).unwrap(), truth)
}

/// Exhaustive minimum of `Δ₁(u)/‖u‖₁` over `u ∈ {±1}ⁿ` with `u = +1` on
/// `positive` seeds and `-1` on `negative` seeds. Returns the sign pattern
/// (`true` for `+1`) and the minimal ratio; ties keep the first pattern in
/// counting order.
pub fn brute_force_ratio_cut(g: &Graph, positive: &[usize], negative: &[usize]) -> (Vec<bool>, f64) {
    let n = g.n();
    assert!(n <= 20);
    let k = dense_gradient(g);
    let mut best = (Vec::new(), f64::INFINITY);
    for mask in 0u32..(1 << n) {
        let plus: Vec<bool> = (0..n).map(|i| mask >> i & 1 == 1).collect();
        if positive.iter().any(|&i| !plus[i]) || negative.iter().any(|&i| plus[i]) {
            continue;
        }
        let u = DVector::from_iterator(n, plus.iter().map(|&p| if p { 1.0 } else { -1.0 }));
        let ratio = (&k * &u).abs().sum() / n as f64;
        if ratio < best.1 - 1e-12 {
            best = (plus, ratio);
        }
    }
    best
}

/// Pairwise AUC: P(score of a positive > score of a negative), ties 1/2.
pub fn auc_oracle(scores: &[f64], positives: &[bool]) -> f64 {
    let mut wins = 0.0;
    let mut pairs = 0.0;
    for (i, &si) in scores.iter().enumerate() {
        if !positives[i] {
            continue;
        }
        for (j, &sj) in scores.iter().enumerate() {
            if positives[j] {
                continue;
            }
            pairs += 1.0;
            if si > sj {
                wins += 1.0;
            } else if si == sj {
                wins += 0.5;
            }
        }
    }
    wins / pairs
}

/// Ten structured two-block graphs (n ≤ 12) with one seed per block:
/// nine regular block pairs joined by a weak matching and two disjoint
/// 5-cliques. Returns `(name, graph, class-0 seeds, class-1 seeds)`.
pub fn structured_cut_cases() -> Vec<(String, Graph, Vec<usize>, Vec<usize>)> {
    let families = [
        (3, 2, 0.2),
        (4, 3, 0.1),
        (4, 2, 0.3),
        (5, 4, 0.5),
        (5, 2, 0.1),
        (6, 3, 0.2),
        (6, 5, 0.8),
        (6, 4, 0.3),
        (6, 2, 0.05),
    ];
    let mut cases = Vec::new();
    for (idx, &(m, degree, bridge)) in families.iter().enumerate() {
        let (g, _) = regular_two_blocks(m, degree, bridge, idx as u64);
        let mut r = rng(idx as u64);
        let (a, b) = (r.random_range(0..m), m + r.random_range(0..m));
        cases.push((format!("blocks m={m} degree={degree} bridge={bridge}"), g, vec![a], vec![b]));
    }
    let mut pairs = Vec::new();
    for base in [0, 5] {
        for i in 0..5 {
            for j in i + 1..5 {
                pairs.push((base + i, base + j, 1.0));
            }
        }
    }
    cases.push(("disjoint 5-cliques".into(), Graph::from_edges(10, pairs).unwrap(), vec![2], vec![7]));
    cases
}
