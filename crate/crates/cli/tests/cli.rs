use std::path::PathBuf;
use std::process::{Command, Output};

use serde_json::Value;

fn metapath(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_metapath"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn fig1() -> String {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../fixtures/fig1")
        .display()
        .to_string()
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

#[test]
fn fig1_dump_has_expected_weights() {
    let dir = tempfile::tempdir().unwrap();
    let report = dir.path().join("report.json");
    let out = metapath(&[
        "run",
        "--dataset",
        &fig1(),
        "--mode",
        "ggtn-split",
        "--layers",
        "1",
        "--epochs",
        "1",
        "--deterministic",
        "--dump-mg",
        "--report",
        report.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", stderr(&out));

    let stream = String::from_utf8(out.stdout).unwrap();
    let line: Vec<&str> = stream.lines().next().unwrap().split('\t').collect();
    assert_eq!(line[0], "1");
    assert_eq!(line.len(), 4, "last epoch carries test accuracy");

    let doc: Value = serde_json::from_str(&std::fs::read_to_string(report).unwrap()).unwrap();
    let mg: Vec<(String, String, f64)> = doc["metapath_graph"]
        .as_array()
        .unwrap()
        .iter()
        .map(|e| {
            (
                e["src"].as_str().unwrap().to_string(),
                e["dst"].as_str().unwrap().to_string(),
                e["weight"].as_f64().unwrap(),
            )
        })
        .collect();
    assert_eq!(
        mg,
        vec![("A".into(), "C".into(), 7.0), ("A".into(), "E".into(), 2.0)]
    );
    assert_eq!(doc["config"]["l"], 2);
    assert_eq!(doc["dataset"]["vertex_names"][4], "E");
}

#[test]
fn zero_walks_is_a_config_error() {
    let out = metapath(&[
        "run",
        "--dataset",
        &fig1(),
        "--mode",
        "wgtn",
        "--num-walks",
        "0",
    ]);
    assert!(!out.status.success());
    assert!(stderr(&out).contains("num_walks"), "{}", stderr(&out));
}

#[test]
fn bad_flags_and_missing_dataset() {
    let out = metapath(&["run", "--dataset", &fig1(), "--mode", "matrix"]);
    assert!(!out.status.success());
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("invalid value"), "{}", stderr(&out));

    let out = metapath(&["run", "--dataset", "/nonexistent/dataset"]);
    assert!(!out.status.success());
    assert!(
        stderr(&out).contains("missing dataset file"),
        "{}",
        stderr(&out)
    );
}

#[test]
fn synthetic_wgtn_run_reports_epoch_time() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("synthetic");
    let out = metapath(&[
        "generate",
        "--out",
        data.to_str().unwrap(),
        "--vertices",
        "5000",
        "--edges",
        "25000",
        "--seed",
        "3",
    ]);
    assert!(out.status.success(), "{}", stderr(&out));

    let report = dir.path().join("report.json");
    let out = metapath(&[
        "run",
        "--dataset",
        data.to_str().unwrap(),
        "--mode",
        "wgtn",
        "--num-walks",
        "50",
        "--layers",
        "3",
        "--epochs",
        "5",
        "--synthetic",
        "--report",
        report.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", stderr(&out));
    let stream = String::from_utf8(out.stdout).unwrap();
    assert_eq!(stream.lines().count(), 5);

    let doc: Value = serde_json::from_str(&std::fs::read_to_string(report).unwrap()).unwrap();
    for key in [
        "peak_test_accuracy",
        "average_epoch_seconds",
        "timed_out",
        "epochs",
    ] {
        assert!(!doc[key].is_null(), "missing {key}");
    }
    assert!(doc["average_epoch_seconds"].as_f64().unwrap() > 0.0);
    assert_eq!(doc["config"]["mode"], "wgtn");
    assert_eq!(doc["config"]["num_walks"], 50);
    assert_eq!(doc["config"]["l"], 4);
    assert_eq!(doc["epochs"].as_array().unwrap().len(), 5);
    assert!(doc["epochs"][4]["test_accuracy"].is_number());
    assert!(doc["epochs"][0]["test_accuracy"].is_null());
}

#[test]
fn every_mode_runs_on_fig1() {
    for mode in ["gcn", "ggtn-vanilla", "ggtn-split"] {
        let out = metapath(&[
            "run",
            "--dataset",
            &fig1(),
            "--mode",
            mode,
            "--layers",
            "1",
            "--epochs",
            "3",
            "--num-walks",
            "2",
            "--enum",
            "dfs",
        ]);
        assert!(out.status.success(), "{mode}: {}", stderr(&out));
        let doc: Value = serde_json::from_slice(
            &out.stdout[out.stdout.iter().position(|&b| b == b'{').unwrap()..],
        )
        .unwrap();
        assert_eq!(doc["epochs"].as_array().unwrap().len(), 3, "{mode}");
    }
}

#[test]
fn wgtn_needs_a_self_edge_column() {
    // the fixture's table has one column per edge type, so the graph stays bare
    let out = metapath(&[
        "run",
        "--dataset",
        &fig1(),
        "--mode",
        "wgtn",
        "--num-walks",
        "2",
        "--layers",
        "1",
    ]);
    assert!(!out.status.success());
    assert!(stderr(&out).contains("self-edge"), "{}", stderr(&out));
}
