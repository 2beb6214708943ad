use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use qrest::pipeline::{read_dataset, RunManifest};

fn qrest(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qrest"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("spawn qrest")
}

fn ok(dir: &Path, args: &[&str]) -> Output {
    let out = qrest(dir, args);
    assert!(
        out.status.success(),
        "qrest {args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn bytes(path: PathBuf) -> Vec<u8> {
    fs::read(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()))
}

/// gen → label → train → eval → perturb-eval → report in `dir`.
fn pipeline(dir: &Path) {
    ok(dir, &["--seed", "11", "gen", "--suite", "coherence", "--dims", "2x2", "--count", "80", "--out", "d.jsonl"]);
    ok(dir, &["label", "--input", "d.jsonl", "--measure", "GeomCoherence", "--out", "l.jsonl"]);
    ok(
        dir,
        &["--seed", "3", "train", "--input", "l.jsonl", "--folds", "3", "--c", "1,10", "--epsilon", "0.01", "--tau", "1,2", "--out", "m.json"],
    );
    ok(dir, &["eval", "--model", "m.json", "--input", "l.jsonl", "--out", "runs/eval"]);
    ok(dir, &["--seed", "5", "perturb-eval", "--model", "m.json", "--input", "l.jsonl", "--out", "runs/noisy"]);
    ok(dir, &["report", "--run-dir", "runs"]);
}

#[test]
fn end_to_end_runs_are_byte_identical() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    pipeline(a.path());
    pipeline(b.path());
    for f in [
        "d.jsonl",
        "l.jsonl",
        "m.json",
        "m.json.cv.csv",
        "runs/eval.report.json",
        "runs/eval.predictions.csv",
        "runs/noisy.report.json",
        "runs/report.md",
        "runs/report.csv",
    ] {
        assert_eq!(bytes(a.path().join(f)), bytes(b.path().join(f)), "{f} differs");
    }

    let csv = fs::read_to_string(a.path().join("runs/eval.predictions.csv")).unwrap();
    assert_eq!(csv.lines().next(), Some("id,true,predicted,residual"));
    assert_eq!(csv.lines().count(), 1 + 20);
    let report = fs::read_to_string(a.path().join("runs/report.csv")).unwrap();
    assert_eq!(report.lines().count(), 3);

    let m = RunManifest::load(&a.path().join("m.json.manifest.json")).unwrap();
    assert_eq!(m.command, "train");
    assert_eq!(m.master_seed, 3);
    assert!(m.inputs.keys().any(|k| k.ends_with("l.jsonl")));
    assert!(m.params["grid"]["c"].is_array());
    assert!(a.path().join("runs/eval.report.json.manifest.json").exists());
}

#[test]
fn retraining_gives_the_same_model_and_relabeling_the_same_labels() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    ok(d, &["gen", "--suite", "coherence", "--dims", "2x2x2", "--count", "40", "--out", "d.jsonl"]);
    ok(d, &["label", "--input", "d.jsonl", "--measure", "RelEntCoherence", "--out", "a.jsonl"]);
    ok(d, &["--workers", "3", "label", "--input", "d.jsonl", "--measure", "RelEntCoherence", "--out", "b.jsonl"]);
    assert_eq!(bytes(d.join("a.jsonl")), bytes(d.join("b.jsonl")));
    let train = |out: &str| {
        ok(d, &["train", "--input", "a.jsonl", "--folds", "2", "--c", "10", "--epsilon", "0.01", "--tau", "1", "--out", out]);
    };
    train("m1.json");
    train("m2.json");
    assert_eq!(bytes(d.join("m1.json")), bytes(d.join("m2.json")));
}

#[test]
fn empty_generation_writes_file_and_manifest() {
    let dir = tempfile::tempdir().unwrap();
    ok(dir.path(), &["gen", "--suite", "mixture", "--dims", "3x3", "--count", "0", "--out", "e.jsonl"]);
    assert!(read_dataset(&dir.path().join("e.jsonl")).unwrap().is_empty());
    let m = RunManifest::load(&dir.path().join("e.jsonl.manifest.json")).unwrap();
    assert_eq!(m.command, "gen");
    assert_eq!(m.artifacts.len(), 1);
}

#[test]
fn usage_errors_exit_with_one() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    assert_eq!(qrest(d, &["gen", "--suite", "nonsense", "--dims", "2x2", "--count", "1", "--out", "x"]).status.code(), Some(1));
    assert_eq!(qrest(d, &["frobnicate"]).status.code(), Some(1));
    assert_eq!(qrest(d, &["report", "--run-dir", "missing"]).status.code(), Some(1));
    // coherence features need qubits
    assert_eq!(qrest(d, &["gen", "--suite", "coherence", "--dims", "3x3", "--count", "1", "--out", "x"]).status.code(), Some(1));
    assert_eq!(qrest(d, &["--help"]).status.code(), Some(0));
}

#[test]
fn empty_report_dir_names_missing_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    fs::create_dir(dir.path().join("runs")).unwrap();
    let out = qrest(dir.path(), &["report", "--run-dir", "runs"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("report.json"));
}

#[test]
fn schema_mismatch_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    ok(d, &["gen", "--suite", "coherence", "--dims", "2x2", "--count", "20", "--out", "two.jsonl"]);
    ok(d, &["label", "--input", "two.jsonl", "--measure", "L1Coherence", "--out", "two.l.jsonl"]);
    ok(d, &["gen", "--suite", "coherence", "--dims", "2x2x2", "--count", "20", "--out", "three.jsonl"]);
    ok(d, &["label", "--input", "three.jsonl", "--measure", "L1Coherence", "--out", "three.l.jsonl"]);
    ok(d, &["train", "--input", "two.l.jsonl", "--folds", "2", "--c", "1", "--epsilon", "0.01", "--tau", "1", "--out", "m.json"]);
    let out = qrest(d, &["eval", "--model", "m.json", "--input", "three.l.jsonl", "--out", "r"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).to_lowercase().contains("schema"));
    assert!(!d.join("r.report.json").exists());
}

#[test]
fn label_failures_over_budget_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    ok(d, &["gen", "--suite", "class1-werner", "--dims", "3x3", "--count", "3", "--out", "w.jsonl"]);
    // corrupt one recipe so that building the state fails
    let text = fs::read_to_string(d.join("w.jsonl")).unwrap();
    let mut lines: Vec<serde_json::Value> = text.lines().map(|l| serde_json::from_str(l).unwrap()).collect();
    lines[0]["recipe"]["params"]["f"] = serde_json::json!(7.0);
    let body: String = lines.iter().map(|v| format!("{v}\n")).collect();
    fs::write(d.join("w.jsonl"), body).unwrap();

    let args = ["label", "--input", "w.jsonl", "--measure", "GeomEntanglement", "--out", "l.jsonl"];
    assert_eq!(qrest(d, &args).status.code(), Some(2));
    let labeled = read_dataset(&d.join("l.jsonl")).unwrap();
    assert_eq!(labeled.iter().filter(|r| r.error.is_some()).count(), 1);
    assert_eq!(labeled.iter().filter(|r| r.label.is_some()).count(), 2);

    let mut tolerant = args.to_vec();
    tolerant.extend(["--failure-budget", "1"]);
    assert_eq!(qrest(d, &tolerant).status.code(), Some(0));
}
