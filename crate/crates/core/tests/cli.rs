use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use graphssl::graph::{read_graph_file, write_graph_file, Graph};

fn graphssl(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_graphssl"))
        .current_dir(dir)
        .args(args)
        .env_remove("GRAPHX_LOG")
        .output()
        .unwrap()
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn two_cliques(dir: &Path) {
    let mut pairs = Vec::new();
    for base in [0, 5] {
        for i in 0..5 {
            for j in i + 1..5 {
                pairs.push((base + i, base + j, 1.0));
            }
        }
    }
    write_graph_file(&Graph::from_edges(10, pairs).unwrap(), dir.join("cliques.gxg")).unwrap();
    fs::write(dir.join("seeds.csv"), "node,class\n1,0\n8,1\n").unwrap();
}

#[test]
fn synth_two_moons_writes_both_files() {
    let dir = tempfile::tempdir().unwrap();
    let out = graphssl(
        dir.path(),
        &["synth", "two-moons", "--n", "500", "--noise", "0.1", "--seed", "1", "--out-features", "f.csv", "--out-truth", "t.csv"],
    );
    assert!(out.status.success(), "{}", stderr(&out));
    let rows = |name: &str| {
        fs::read_to_string(dir.path().join(name))
            .unwrap()
            .lines()
            .filter(|l| !l.starts_with('#') && !l.starts_with("node"))
            .count()
    };
    assert_eq!(rows("f.csv"), 500);
    assert_eq!(rows("t.csv"), 500);
    assert!(dir.path().join("f.config.json").exists());
}

#[test]
fn synth_sbm_and_invalid_probability() {
    let dir = tempfile::tempdir().unwrap();
    let args = ["synth", "sbm", "--sizes", "20,20", "--p-in", "0.5", "--p-out", "0.02", "--seed", "7", "--out-graph", "g.gxg", "--out-truth", "t.csv"];
    let out = graphssl(dir.path(), &args);
    assert!(out.status.success(), "{}", stderr(&out));
    assert_eq!(read_graph_file(dir.path().join("g.gxg")).unwrap().n(), 40);

    let mut bad = args;
    bad[7] = "1.5";
    let out = graphssl(dir.path(), &bad);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("p-out"), "{}", stderr(&out));
}

#[test]
fn build_graph_checks_k_and_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    graphssl(d, &["synth", "two-moons", "--n", "500", "--seed", "1", "--out-features", "f.csv", "--out-truth", "t.csv"]);
    let build = |out: &str| graphssl(d, &["build-graph", "--features", "f.csv", "--k", "10", "--kernel", "gaussian", "--sigma", "auto", "--out", out]);
    let first = build("a.gxg");
    assert!(first.status.success(), "{}", stderr(&first));
    let stdout = String::from_utf8_lossy(&first.stdout);
    assert!(stdout.contains("n = 500") && stdout.contains("edges =") && stdout.contains("degree min/mean/max"));
    let g = read_graph_file(d.join("a.gxg")).unwrap();
    assert!((0..g.n()).all(|i| g.degree_count(i) >= 10));
    build("b.gxg");
    assert_eq!(fs::read(d.join("a.gxg")).unwrap(), fs::read(d.join("b.gxg")).unwrap());

    let out = graphssl(d, &["build-graph", "--features", "f.csv", "--k", "600", "--out", "c.gxg"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("k must be < n"), "{}", stderr(&out));
}

#[test]
fn solve_labels_cliques_and_reruns_identically() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    two_cliques(d);
    let out = graphssl(d, &["solve", "--graph", "cliques.gxg", "--labels", "seeds.csv", "--out-scores", "s.csv", "--out-trace", "trace.json"]);
    assert!(out.status.success(), "{}", stderr(&out));

    let scores = fs::read_to_string(d.join("s.csv")).unwrap();
    let mut lines = scores.lines();
    assert_eq!(lines.next(), Some("node,score_0,score_1,label,tie"));
    let labels: Vec<&str> = lines.map(|l| l.split(',').nth(3).unwrap()).collect();
    assert_eq!(labels, ["0", "0", "0", "0", "0", "1", "1", "1", "1", "1"]);

    let trace: serde_json::Value = serde_json::from_str(&fs::read_to_string(d.join("trace.json")).unwrap()).unwrap();
    let records = trace.as_array().unwrap();
    assert!(!records.is_empty());
    for key in ["ratios", "inner_iters", "residual", "max_violation", "wall_ms"] {
        assert!(records[0].get(key).is_some(), "{key}");
    }

    // Rerun from the resolved config alone.
    let again = graphssl(d, &["solve", "--config", "s.config.json", "--out-scores", "s2.csv"]);
    assert!(again.status.success(), "{}", stderr(&again));
    assert_eq!(fs::read(d.join("s.csv")).unwrap(), fs::read(d.join("s2.csv")).unwrap());
}

#[test]
fn solve_errors_and_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    two_cliques(d);
    fs::write(d.join("one.csv"), "node,class\n1,0\n").unwrap();
    let out = graphssl(d, &["solve", "--graph", "cliques.gxg", "--labels", "one.csv", "--classes", "2", "--out-scores", "s.csv"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("class 1 has no seeds"), "{}", stderr(&out));

    let out = graphssl(d, &["solve", "--graph", "cliques.gxg", "--labels", "seeds.csv", "--step-rule", "paper", "--sigma0", "3", "--tau0", "3", "--out-scores", "s.csv"]);
    assert_eq!(out.status.code(), Some(2));

    // One outer step cannot meet the tolerance: exit 3, outputs written.
    let out = graphssl(d, &["solve", "--graph", "cliques.gxg", "--labels", "seeds.csv", "--init", "random", "--outer-max", "1", "--outer-tol", "0", "--out-scores", "s3.csv"]);
    assert_eq!(out.status.code(), Some(3), "{}", stderr(&out));
    assert!(d.join("s3.csv").exists());

    let out = graphssl(d, &["solve", "--graph", "cliques.gxg", "--labels", "seeds.csv", "--dt", "inf", "--out-scores", "s4.csv"]);
    assert_eq!(out.status.code(), Some(2));

    let out = graphssl(d, &["solve", "--graph", "cliques.gxg", "--labels", "seeds.csv", "--shift", "sideways", "--out-scores", "s5.csv"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn unknown_config_keys_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    two_cliques(d);
    fs::write(d.join("c.json"), r#"{"solver": {"delta_t": 1.0}}"#).unwrap();
    let out = graphssl(d, &["solve", "--config", "c.json", "--graph", "cliques.gxg", "--labels", "seeds.csv", "--out-scores", "s.csv"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("delta_t"), "{}", stderr(&out));
}

#[test]
fn eval_reports_and_rejects_malformed_scores() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    fs::write(d.join("truth.csv"), "node,class\n0,0\n1,0\n2,1\n3,1\n").unwrap();
    fs::write(d.join("seeds.csv"), "node,class\n0,0\n3,1\n").unwrap();
    fs::write(
        d.join("perfect.csv"),
        "node,score_0,score_1,label,tie\n0,1,-1,0,0\n1,0.5,-0.5,0,0\n2,-0.5,0.5,1,0\n3,-1,1,1,0\n",
    )
    .unwrap();
    let out = graphssl(d, &["eval", "--scores", "perfect.csv", "--truth", "truth.csv", "--labels", "seeds.csv", "--report", "r.json"]);
    assert!(out.status.success(), "{}", stderr(&out));
    let report: serde_json::Value = serde_json::from_str(&fs::read_to_string(d.join("r.json")).unwrap()).unwrap();
    assert_eq!(report["accuracy"], 1.0);
    assert_eq!(report["n_eval"], 2);

    fs::write(d.join("bad.csv"), "node,score_0,score_1,label,tie\n0,1,-1,0,0\n1,oops,-0.5,0,0\n").unwrap();
    let out = graphssl(d, &["eval", "--scores", "bad.csv", "--truth", "truth.csv", "--report", "r2.json"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("line 3"), "{}", stderr(&out));
}

#[test]
fn experiment_writes_fifteen_cells() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let out = graphssl(d, &["synth", "sbm", "--sizes", "30,30", "--p-in", "0.5", "--p-out", "0.05", "--seed", "2", "--out-graph", "g.gxg", "--out-truth", "t.csv"]);
    assert!(out.status.success());
    let out = graphssl(
        d,
        &["experiment", "--graph", "g.gxg", "--truth", "t.csv", "--fractions", "0.02,0.05,0.10,0.15,0.20", "--seeds", "1,2,3", "--jobs", "2", "--report", "exp.json"],
    );
    assert!(out.status.success(), "{}", stderr(&out));
    let report: serde_json::Value = serde_json::from_str(&fs::read_to_string(d.join("exp.json")).unwrap()).unwrap();
    let cells = report["cells"].as_array().unwrap();
    assert_eq!(cells.len(), 15);
    for cell in cells {
        for key in ["fraction", "seed", "accuracy", "auc_per_class", "auc_mean"] {
            assert!(cell.get(key).is_some(), "{key}");
        }
    }
    assert_eq!(report["summary"].as_array().unwrap().len(), 5);
    let csv = fs::read_to_string(d.join("exp.csv")).unwrap();
    assert_eq!(csv.lines().count(), 16);
    assert!(d.join("exp.config.json").exists());
}
