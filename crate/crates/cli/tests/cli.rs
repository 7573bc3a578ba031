use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn mpass(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mpass")).args(args).output().unwrap()
}

fn read_json(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

const WELL: [&str; 10] = [
    "--x-star",
    "-1,0",
    "--y-star",
    "1,0",
    "--barrier-center",
    "-1,0",
    "--barrier-radius",
    "0.5",
    "--seed",
    "3",
];

#[test]
fn solve_double_well_writes_report() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let mut args = vec!["solve", "--corpus", "double_well", "--out-dir", out];
    args.extend(WELL);
    let o = mpass(&args);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));

    let report = read_json(&dir.path().join("report.json"));
    assert_eq!(report["schema"], 1);
    for key in ["config", "problem", "run", "classification"] {
        assert!(report.get(key).is_some(), "missing {key}");
    }
    let class = &report["classification"];
    assert_eq!(class["verdict"], "Critical");
    assert!((class["c_best"].as_f64().unwrap() - 1.0).abs() < 5e-2);
    let x = class["critical_witness"]["x"].as_array().unwrap();
    assert_eq!(x.len(), 2);
    assert_eq!(report["problem"]["barrier"]["kind"], "ball");

    let csv = std::fs::read_to_string(dir.path().join("path.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("t,x1,x2,f"));
    assert!(lines.count() >= 2);
}

#[test]
fn expression_matches_corpus_member() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let mut args = vec!["solve", "--expr", "(x1^2 - 1)^2 + x2^2", "--dim", "2", "--out-dir", out];
    args.extend(WELL);
    let o = mpass(&args);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let report = read_json(&dir.path().join("report.json"));
    assert_eq!(report["classification"]["verdict"], "Critical");
}

#[test]
fn geometry_violation_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    let o = mpass(&[
        "solve",
        "--corpus",
        "double_well",
        "--x-star",
        "-1,0",
        "--y-star",
        "-0.9,0",
        "--barrier-center",
        "-1,0",
        "--barrier-radius",
        "0.5",
        "--out-dir",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("geometry"));
    assert!(!dir.path().join("report.json").exists());
}

#[test]
fn boundary_inequality_is_cited() {
    // f(y*) = 9 lies above the lowest point of the barrier circle.
    let o = mpass(&[
        "solve",
        "--corpus",
        "double_well",
        "--x-star",
        "-1,0",
        "--y-star",
        "2,0",
        "--barrier-center",
        "0,0",
        "--barrier-radius",
        "1.5",
    ]);
    assert_eq!(o.status.code(), Some(1));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("f(x*), f(y*) < inf of f over the barrier boundary"), "{err}");
}

#[test]
fn dimension_mismatch_exits_one() {
    let o = mpass(&[
        "solve",
        "--corpus",
        "double_well",
        "--x-star",
        "-1,0",
        "--y-star",
        "1,0,0",
        "--barrier-center",
        "-1,0",
        "--barrier-radius",
        "0.5",
    ]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("dimension"));
}

#[test]
fn unparsable_flags_exit_one() {
    assert_eq!(mpass(&["solve", "--corpus", "double_well", "--x-star", "a,b"]).status.code(), Some(1));
    assert_eq!(mpass(&["frobnicate"]).status.code(), Some(1));
    assert_eq!(mpass(&["--help"]).status.code(), Some(0));
}

#[test]
fn inconclusive_exits_two() {
    // Without the far waypoint the short schedule cannot decide.
    let dir = tempfile::tempdir().unwrap();
    let o = mpass(&[
        "solve",
        "--corpus",
        "broughton",
        "--x-star",
        "-1,0",
        "--y-star",
        "1,-2",
        "--barrier-normal",
        "1,0",
        "--quick",
        "--out-dir",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(2), "{}", String::from_utf8_lossy(&o.stderr));
    let report = read_json(&dir.path().join("report.json"));
    assert_eq!(report["classification"]["verdict"], "Inconclusive");
}

#[test]
fn escaping_instance_is_tangency() {
    let dir = tempfile::tempdir().unwrap();
    let o = mpass(&[
        "solve",
        "--corpus",
        "broughton",
        "--x-star",
        "-1,0",
        "--y-star",
        "1,-2",
        "--barrier-normal",
        "1,0",
        "--via",
        "0.05,-10",
        "--out-dir",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let report = read_json(&dir.path().join("report.json"));
    let class = &report["classification"];
    assert_eq!(class["verdict"], "TangencyAtInfinity");
    assert!(!class["tangency_trace"].as_array().unwrap().is_empty());
    assert!(class.get("critical_witness").is_none());
}

#[test]
fn sweep_cross_square_and_linear() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let o = mpass(&["sweep", "--corpus", "cross_square", "--radii", "10,20,40,80", "--out-dir", out]);
    assert_eq!(o.status.code(), Some(0));
    let doc = read_json(&dir.path().join("clusters.json"));
    assert_eq!(doc["schema"], 1);
    let clusters = doc["clusters"].as_array().unwrap();
    assert_eq!(clusters.len(), 1);
    assert!(clusters[0]["value"].as_f64().unwrap().abs() <= 1e-6);
    assert_eq!(clusters[0]["branch_count"], 4);
    let csv = std::fs::read_to_string(dir.path().join("sweep.csv")).unwrap();
    assert_eq!(csv.lines().next(), Some("R,theta,x1,x2,f,residual,branch"));

    let o = mpass(&["sweep", "--corpus", "linear", "--out-dir", out]);
    assert_eq!(o.status.code(), Some(0));
    let doc = read_json(&dir.path().join("clusters.json"));
    assert!(doc["clusters"].as_array().unwrap().is_empty());
}

#[test]
fn sweep_expression_finds_cluster_near_zero() {
    let dir = tempfile::tempdir().unwrap();
    let o = mpass(&[
        "sweep",
        "--expr",
        "x1 + x1^2*x2",
        "--dim",
        "2",
        "--out-dir",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0));
    let doc = read_json(&dir.path().join("clusters.json"));
    let clusters = doc["clusters"].as_array().unwrap();
    assert_eq!(clusters.len(), 1);
    assert!(clusters[0]["value"].as_f64().unwrap().abs() < 0.05);
}

#[test]
fn sweep_refusals() {
    assert_eq!(mpass(&["sweep", "--corpus", "abs_x1"]).status.code(), Some(1));
    assert_eq!(
        mpass(&["sweep", "--corpus", "linear", "--dim", "4", "--exhaustive"]).status.code(),
        Some(1)
    );
    assert_eq!(mpass(&["sweep", "--corpus", "linear", "--radii", "10,20,40"]).status.code(), Some(1));
}

#[test]
fn exhaustive_sphere_sweep_in_3d() {
    let dir = tempfile::tempdir().unwrap();
    let o = mpass(&[
        "sweep",
        "--corpus",
        "cross_square",
        "--dim",
        "3",
        "--exhaustive",
        "--out-dir",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0));
    let doc = read_json(&dir.path().join("clusters.json"));
    assert_eq!(doc["dim"], 3);
    let csv = std::fs::read_to_string(dir.path().join("sweep.csv")).unwrap();
    assert_eq!(csv.lines().next(), Some("R,theta,x1,x2,x3,f,residual,branch"));
}

#[test]
fn corpus_list_names_every_member() {
    let o = mpass(&["corpus", "list"]);
    assert_eq!(o.status.code(), Some(0));
    let text = String::from_utf8_lossy(&o.stdout);
    for name in [
        "double_well",
        "nonsmooth_well",
        "broughton",
        "cross_square",
        "linear",
        "abs_x1",
        "squared_norm",
    ] {
        assert!(text.contains(name), "{name}");
    }
}

#[test]
fn corpus_run_quick_writes_scoreboard() {
    let dir = tempfile::tempdir().unwrap();
    let o = mpass(&["corpus", "run", "--quick", "--seed", "7", "--out-dir", dir.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stdout));
    let csv = std::fs::read_to_string(dir.path().join("scoreboard.csv")).unwrap();
    assert!(csv.starts_with("item,c,verdict,oracle,gap,passed,detail\n"));
    assert!(csv.contains("solve double_well,"));
    assert!(dir.path().join("scoreboard.md").exists());
    let stdout = String::from_utf8_lossy(&o.stdout);
    assert_eq!(stdout.lines().filter(|l| l.starts_with("criterion")).count(), 9);
}
