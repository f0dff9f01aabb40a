//! End-to-end runs of the binary: exit codes, messages, and agreement with
//! the library when stages are chained through files.

use std::path::Path;
use std::process::{Command, Output};

use causal_design::io;
use causal_design_core::discovery::{ges_discover, GesConfig};
use causal_design_core::estimation::{estimate_effect, fit_scm, Expansion};
use causal_design_core::oracle::ground_truth_dag;
use causal_design_core::validation::reference_scenario;
use causal_design_core::CausalGraph;
use serde_json::Value;

fn bin(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_causal-design"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn generate(dir: &Path, n: usize, seed: u64) -> std::path::PathBuf {
    let path = dir.join(format!("data{seed}.csv"));
    let o = bin(&["generate", "--n", &n.to_string(), "--seed", &seed.to_string(), "--out", s(&path)]);
    assert!(o.status.success(), "{}", stderr(&o));
    path
}

fn reference(dir: &Path) -> std::path::PathBuf {
    let path = dir.join("reference.json");
    io::write_json(&path, &ground_truth_dag()).unwrap();
    path
}

#[test]
fn pipeline_matches_library() {
    let dir = tempfile::tempdir().unwrap();
    let data = generate(dir.path(), 400, 11);
    let graph = dir.path().join("cpdag.json");
    let o = bin(&["discover", "--data", s(&data), "--out", s(&graph)]);
    assert!(o.status.success(), "{}", stderr(&o));

    let ds = io::load_csv(&data, &causal_design_core::dataset::default_schema()).unwrap();
    let lib = ges_discover(&ds, &GesConfig::default()).unwrap();
    let from_file: CausalGraph = io::read_json(&graph).unwrap();
    assert!(from_file.same_structure(&lib.graph));

    let refg = reference(dir.path());
    let o = bin(&[
        "estimate", "--graph", s(&refg), "--data", s(&data), "--treatment", "Height", "--control", "3",
        "--treat", "3.2", "--condition", "GFA=300", "--condition", "NF=3", "--condition", "WWR_North=0.3",
        "--condition", "WWR_East=0.3", "--condition", "WWR_South=0.3", "--condition", "WWR_West=0.3",
        "--condition", "u_Value_Roof=0.2", "--condition", "u_Value_Ground_Floor=0.2",
        "--condition", "Permeability=7.5", "--samples", "400", "--bootstrap", "3", "--seed", "5",
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let v: Value = serde_json::from_slice(&o.stdout).unwrap();

    let mut sc = reference_scenario();
    sc.n_samples = 400;
    sc.bootstrap = 3;
    sc.seed = 5;
    let scm = fit_scm(&ds, &ground_truth_dag(), Expansion::Interactions2).unwrap();
    let est = estimate_effect(&scm, &sc).unwrap();
    assert_eq!(v["tau"].as_f64().unwrap().to_bits(), est.tau.to_bits());
    assert_eq!(v["standard_error"].as_f64().unwrap().to_bits(), est.standard_error.to_bits());
}

#[test]
fn missing_outcome_column_is_invalid_input() {
    let dir = tempfile::tempdir().unwrap();
    let data = generate(dir.path(), 30, 1);
    let text = std::fs::read_to_string(&data).unwrap();
    let cut: String = text.lines().map(|l| l.rsplit_once(',').unwrap().0.to_string() + "\n").collect();
    std::fs::write(&data, cut).unwrap();
    let o = bin(&["discover", "--data", s(&data), "--out", s(&dir.path().join("g.json"))]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("missing column Heating_Load"), "{}", stderr(&o));
}

#[test]
fn bad_condition_token_is_echoed() {
    let dir = tempfile::tempdir().unwrap();
    let data = generate(dir.path(), 100, 1);
    let refg = reference(dir.path());
    let base = ["estimate", "--graph", s(&refg), "--data", s(&data), "--treatment", "Height", "--control", "3", "--treat", "3.2"];
    for (token, echo) in [("Heigth_X=3", "Heigth_X"), ("GFA:300", "GFA:300"), ("GFA=big", "big")] {
        let mut args = base.to_vec();
        args.extend(["--condition", token]);
        let o = bin(&args);
        assert_eq!(o.status.code(), Some(2), "{token}");
        assert!(stderr(&o).contains(echo), "{token}: {}", stderr(&o));
    }
}

#[test]
fn equal_control_and_treat_give_zero_effect() {
    let dir = tempfile::tempdir().unwrap();
    let data = generate(dir.path(), 200, 3);
    let refg = reference(dir.path());
    let o = bin(&[
        "estimate", "--graph", s(&refg), "--data", s(&data), "--treatment", "Height", "--control", "3.1",
        "--treat", "3.1", "--samples", "200", "--bootstrap", "2",
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let v: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["tau"].as_f64().unwrap(), 0.0);
    assert_eq!(v["standard_error"].as_f64().unwrap(), 0.0);
}

#[test]
fn identify_needs_an_oriented_graph() {
    let dir = tempfile::tempdir().unwrap();
    let mut g = CausalGraph::new(["Height", "Volume", "Heating_Load"]).unwrap();
    g.add_undirected_by_name("Height", "Volume").unwrap();
    g.add_undirected_by_name("Volume", "Heating_Load").unwrap();
    let path = dir.path().join("cpdag.json");
    io::write_json(&path, &g).unwrap();
    let o = bin(&["identify", "--graph", s(&path), "--treatment", "Height", "--outcome", "HL"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("not fully oriented"), "{}", stderr(&o));

    let refg = reference(dir.path());
    let o = bin(&["identify", "--graph", s(&refg), "--treatment", "WA", "--outcome", "HL"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let v: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["treatment"], "Window_Area");
    assert_eq!(v["minimum_adjustment_sets"][0].as_array().unwrap().len(), 4);
}

#[test]
fn prune_reports_contradicted_edge() {
    let dir = tempfile::tempdir().unwrap();
    let refg = reference(dir.path());
    let k = dir.path().join("k.json");
    std::fs::write(&k, r#"{"required": [["Volume", "Height"]]}"#).unwrap();
    let o = bin(&["prune", "--graph", s(&refg), "--constraints", s(&k), "--out", s(&dir.path().join("p.json"))]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("Height -> Volume"), "{}", stderr(&o));
}

#[test]
fn validate_prints_three_columns() {
    let o = bin(&["validate", "--n", "300", "--oracle-samples", "20"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = String::from_utf8(o.stdout).unwrap();
    let header = text.lines().nth(1).unwrap();
    for c in ["causal", "naive", "oracle"] {
        assert!(header.contains(c), "{text}");
    }
    assert!(text.lines().any(|l| l.starts_with("mean effect")), "{text}");
}

#[test]
fn unreadable_input_is_exit_2() {
    let o = bin(&["discover", "--data", "/nonexistent/x.csv", "--out", "/tmp/never.json"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).starts_with("error: "));
}
