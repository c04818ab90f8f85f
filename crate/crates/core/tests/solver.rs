mod common;

use common::{brute_force_ratio_cut, dense_gradient, rng, sbm_decrease_instance, structured_cut_cases};
use graphssl::datasets::synth_sbm;
use graphssl::graph::Graph;
use graphssl::solver::{
    class_ratios, inner_primal_dual, solve, InitRule, LabelConstraints, MultiClassState, ShiftRule, SolverConfig,
};
use nalgebra::DVector;
use ndarray::Array2;
use proptest::prelude::*;
use rand::Rng;

fn two_cliques(m: usize) -> Graph {
    let mut pairs = Vec::new();
    for base in [0, m] {
        for i in 0..m {
            for j in i + 1..m {
                pairs.push((base + i, base + j, 1.0));
            }
        }
    }
    Graph::from_edges(2 * m, pairs).unwrap()
}

fn dense_tv(k: &nalgebra::DMatrix<f64>, u: &[f64]) -> f64 {
    (k * DVector::from_column_slice(u)).abs().sum()
}

/// The proximal objective of one outer step, evaluated with dense algebra.
fn step_objective(k: &nalgebra::DMatrix<f64>, v: &Array2<f64>, c: &[f64], dt: f64, u: &Array2<f64>) -> f64 {
    let mut total = 0.0;
    for class in 0..u.nrows() {
        let (ur, vr) = (u.row(class), v.row(class));
        let prox: f64 = ur.iter().zip(vr).map(|(a, b)| (a - b).powi(2)).sum::<f64>() / (2.0 * dt);
        let lin: f64 = ur.iter().zip(vr).map(|(a, b)| a * b.signum() * f64::from(*b != 0.0)).sum();
        total += prox + dense_tv(k, &ur.to_vec()) - c[class] * lin;
    }
    total
}

#[test]
fn inner_loop_beats_random_feasible_candidates() {
    for instance in 0..5u64 {
        let mut r = rng(100 + instance);
        let g = common::random_graph(&mut r, 6, 0.5);
        let c = LabelConstraints::new(6, vec![vec![0], vec![5]], 0.1).unwrap();
        let k = g.gradient();
        let dense = dense_gradient(&g);

        let mut v = Array2::from_shape_fn((2, 6), |_| r.random_range(-1.0..1.0));
        c.project(&mut v);
        let coefficients = class_ratios(&k, &v, 1e-12);
        let mut state = MultiClassState {
            u: v.clone(),
            z: Array2::zeros((2, k.range_dim())),
            u_bar: v.clone(),
            v: v.clone(),
        };
        state.restart_from_u(&k);
        let base = SolverConfig {
            inner_max: 200_000,
            inner_tol: 1e-14,
            ..SolverConfig::default()
        };
        let (sigma0, tau0) = base.resolved_steps(&k).unwrap();
        let config = SolverConfig { sigma0, tau0, ..base };
        inner_primal_dual(&mut state, &k, &c, &config, &coefficients).unwrap();
        assert!(state.z.iter().all(|z| z.abs() <= 1.0 + 1e-12));
        assert!(c.max_violation(&state.u) <= 1e-12);

        let best = step_objective(&dense, &v, &coefficients, config.dt, &state.u);
        for trial in 0..1000 {
            // Half global draws, half small perturbations of the answer.
            let mut cand = if trial % 2 == 0 {
                Array2::from_shape_fn((2, 6), |_| r.random_range(-2.0..2.0))
            } else {
                &state.u + &Array2::from_shape_fn((2, 6), |_| r.random_range(-1e-3..1e-3))
            };
            c.project(&mut cand);
            let value = step_objective(&dense, &v, &coefficients, config.dt, &cand);
            assert!(best <= value + 1e-9, "instance {instance}: {best} > {value}");
        }
    }
}

#[test]
fn disjoint_cliques_follow_their_seeds() {
    let g = two_cliques(5);
    let c = LabelConstraints::new(10, vec![vec![2], vec![7]], 0.1).unwrap();
    let (pred, _) = solve(&g, &c, &SolverConfig::default()).unwrap();
    assert_eq!(pred.labels, vec![0, 0, 0, 0, 0, 1, 1, 1, 1, 1]);

    let (plus, _) = brute_force_ratio_cut(&g, &[2], &[7]);
    let oracle: Vec<usize> = plus.iter().map(|&p| usize::from(!p)).collect();
    assert_eq!(pred.labels, oracle);
}

#[test]
fn fully_labeled_problem_reproduces_labels() {
    let g = two_cliques(3);
    let labels = [1, 0, 2, 2, 1, 0];
    let mut seeds = vec![Vec::new(); 3];
    for (i, &l) in labels.iter().enumerate() {
        seeds[l].push(i);
    }
    let c = LabelConstraints::new(6, seeds, 0.1).unwrap();
    for shift in [ShiftRule::Degree, ShiftRule::Median] {
        let config = SolverConfig {
            shift,
            ..SolverConfig::default()
        };
        let (pred, _) = solve(&g, &c, &config).unwrap();
        assert_eq!(pred.labels, labels);
    }
}

#[test]
fn two_triangles_decrease() {
    let g = Graph::from_edges(
        6,
        [(0, 1, 1.0), (1, 2, 1.0), (0, 2, 1.0), (3, 4, 1.0), (4, 5, 1.0), (3, 5, 1.0), (2, 3, 0.1)],
    )
    .unwrap();
    let c = LabelConstraints::new(6, vec![vec![0], vec![5]], 0.1).unwrap();
    for init in [InitRule::Diffusion, InitRule::Random] {
        let config = SolverConfig {
            init,
            ..SolverConfig::default()
        };
        let (pred, trace) = solve(&g, &c, &config).unwrap();
        let sums = trace.ratio_sums();
        for w in sums.windows(2) {
            assert!(w[1] <= w[0] + 1e-9, "{sums:?}");
        }
        for r in &trace.records {
            assert!(r.decrease_slack.iter().all(|&s| s >= -1e-9));
        }
        assert_eq!(pred.labels, vec![0, 0, 0, 1, 1, 1]);
    }
}

#[test]
fn structured_graphs_match_the_exhaustive_ratio_cut() {
    for (name, g, pos, neg) in structured_cut_cases() {
        let c = LabelConstraints::new(g.n(), vec![pos.clone(), neg.clone()], 0.1).unwrap();
        let (pred, _) = solve(&g, &c, &SolverConfig::default()).unwrap();
        let (plus, _) = brute_force_ratio_cut(&g, &pos, &neg);
        let oracle: Vec<usize> = plus.iter().map(|&p| usize::from(!p)).collect();
        assert_eq!(pred.labels, oracle, "{name}");
    }
}

#[test]
fn decrease_holds_on_random_sbms() {
    for inst in 0..6 {
        let (g, _, c) = sbm_decrease_instance(inst);
        let (_, trace) = solve(&g, &c, &SolverConfig::default()).unwrap();
        let sums = trace.ratio_sums();
        for w in sums.windows(2) {
            assert!(w[1] <= w[0] + 1e-7, "instance {inst}: {sums:?}");
        }
        for r in &trace.records {
            assert!(r.decrease_slack.iter().all(|&s| s >= -1e-9), "instance {inst}");
            assert!(r.ratios.iter().all(|x| x.is_finite() && *x >= 0.0));
        }
    }
}

#[test]
fn solves_are_deterministic() {
    let (g, _) = synth_sbm(&[15, 15, 15], 0.4, 0.05, 21).unwrap();
    let c = LabelConstraints::new(45, vec![vec![0], vec![15], vec![30]], 0.1).unwrap();
    for init in [InitRule::Diffusion, InitRule::Random] {
        let config = SolverConfig {
            init,
            seed: 42,
            outer_max: 10,
            ..SolverConfig::default()
        };
        let (a, _) = solve(&g, &c, &config).unwrap();
        let (b, _) = solve(&g, &c, &config).unwrap();
        assert_eq!(a, b);
        let bits = |p: &graphssl::solver::Prediction| p.scores.iter().map(|x| x.to_bits()).collect::<Vec<_>>();
        assert_eq!(bits(&a), bits(&b));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn labels_are_invariant_to_weight_scaling(seed in 0u64..1000, alpha in prop::sample::select(vec![0.01, 0.5, 3.7, 100.0])) {
        let (g, _) = synth_sbm(&[12, 12], 0.6, 0.08, seed).unwrap();
        let c = LabelConstraints::new(24, vec![vec![0, 1], vec![12]], 0.1).unwrap();
        let config = SolverConfig { outer_max: 30, ..SolverConfig::default() };
        let (base, _) = solve(&g, &c, &config).unwrap();
        let (scaled, _) = solve(&g.scaled(alpha).unwrap(), &c, &config).unwrap();
        prop_assert_eq!(base.labels, scaled.labels);
    }

    #[test]
    fn seeds_keep_their_labels(seed in any::<u64>()) {
        let mut r = rng(seed);
        let n = r.random_range(6..30);
        let g = common::random_graph(&mut r, n, 0.2);
        let classes = r.random_range(2..=3);
        let seeds: Vec<Vec<usize>> = (0..classes).map(|k| vec![k, classes + k]).collect();
        let c = LabelConstraints::new(n, seeds.clone(), 0.1).unwrap();
        let config = SolverConfig { outer_max: 20, seed, ..SolverConfig::default() };
        let (pred, trace) = solve(&g, &c, &config).unwrap();
        for (k, set) in seeds.iter().enumerate() {
            for &i in set {
                prop_assert_eq!(pred.labels[i], k);
            }
        }
        for rec in &trace.records {
            prop_assert!(rec.max_violation <= 1e-12);
        }
    }
}
