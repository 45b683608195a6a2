use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use botwatch::pipeline::EvalSuite;
use tempfile::TempDir;

fn botwatch(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_botwatch"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn ok(args: &[&str]) -> String {
    let out = botwatch(args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn path(dir: &TempDir, name: &str) -> String {
    dir.path().join(name).to_string_lossy().into_owned()
}

fn small_corpus(dir: &TempDir) -> String {
    let c = path(dir, "corpus.jsonl");
    ok(&["synth", "--bots", "12", "--humans", "15", "--seed", "3", "--out", &c]);
    c
}

fn header(csv: &Path) -> Vec<String> {
    let mut r = csv::Reader::from_path(csv).unwrap();
    r.headers().unwrap().iter().map(String::from).collect()
}

#[test]
fn cdfa_group_has_nine_columns_and_label() {
    let dir = tempfile::tempdir().unwrap();
    let c = small_corpus(&dir);
    let f = path(&dir, "f.csv");
    ok(&["features", "--corpus", &c, "--out", &f, "--groups", "cdfa"]);
    let h = header(Path::new(&f));
    assert_eq!(h.len(), 10);
    assert_eq!(h.last().unwrap(), "label");
    assert!(h[..9].iter().all(|n| n.contains("CDFA")), "{h:?}");
    let sidecar = PathBuf::from(format!("{f}.meta.json"));
    assert!(sidecar.exists());
}

#[test]
fn all_groups_and_baselines() {
    let dir = tempfile::tempdir().unwrap();
    let c = small_corpus(&dir);
    let f = path(&dir, "f.csv");
    ok(&["features", "--corpus", &c, "--out", &f]);
    assert_eq!(header(Path::new(&f)).len(), 34);

    let g = path(&dir, "g.csv");
    ok(&["features", "--corpus", &c, "--out", &g, "--groups", "chain", "--baselines"]);
    let h = header(Path::new(&g));
    assert_eq!(h.len(), 12 + 6 + 1);
    assert!(h.iter().any(|n| n == "baseline:TF-IDF max"));
}

#[test]
fn bad_inputs_exit_nonzero() {
    let dir = tempfile::tempdir().unwrap();
    let c = small_corpus(&dir);
    let f = path(&dir, "f.csv");

    let out = botwatch(&["features", "--corpus", &c, "--out", &f, "--groups", ""]);
    assert!(!out.status.success());

    let out = botwatch(&["features", "--corpus", &c, "--out", &f, "--groups", "nonsense"]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).starts_with("botwatch:"));

    let out = botwatch(&["features", "--corpus", &path(&dir, "missing.jsonl"), "--out", &f]);
    assert!(!out.status.success());

    let out = botwatch(&["evaluate", "--features", &path(&dir, "missing.csv"), "--out", &path(&dir, "r.json")]);
    assert!(!out.status.success());
}

#[test]
fn evaluate_writes_sections_and_histograms() {
    let dir = tempfile::tempdir().unwrap();
    let c = small_corpus(&dir);
    let f = path(&dir, "f.csv");
    ok(&["features", "--corpus", &c, "--out", &f, "--groups", "santia,chu"]);
    let report = path(&dir, "out/report.json");
    let table = ok(&[
        "evaluate",
        "--features",
        &f,
        "--out",
        &report,
        "--combos",
        "santia,santia+chu",
        "--models",
        "decision_tree,adaboost",
        "--hist-dir",
        &path(&dir, "hist"),
    ]);
    assert!(table.contains("| santia+chu | adaboost |"), "{table}");

    let suite = EvalSuite::load(Path::new(&report)).unwrap();
    assert_eq!(suite.sections.len(), 2);
    assert_eq!(suite.section("santia").unwrap().features.len(), 6);
    assert_eq!(suite.section("santia+chu").unwrap().models.len(), 2);

    let hist = dir.path().join("hist");
    assert_eq!(std::fs::read_dir(&hist).unwrap().count(), 12);
    let text = std::fs::read_to_string(hist.join("ff-ratio.csv")).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("value,label"));
    let rows: Vec<&str> = lines.collect();
    assert_eq!(rows.len(), 27);
    assert!(rows.iter().all(|l| l.ends_with(",bot") || l.ends_with(",human")));

    let ranked = ok(&["rank", "--report", &report, "--combo", "santia", "--top", "3"]);
    assert_eq!(ranked.lines().count(), 2 + 3);
    let printed = ok(&["report", "--report", &report]);
    assert_eq!(printed, table);
}

#[test]
fn train_reports_importances() {
    let dir = tempfile::tempdir().unwrap();
    let c = small_corpus(&dir);
    let f = path(&dir, "f.csv");
    ok(&["features", "--corpus", &c, "--out", &f, "--groups", "chain"]);
    let out = path(&dir, "train.json");
    ok(&["train", "--features", &f, "--model", "decision_tree", "--combo", "chain", "--out", &out]);
    let v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    let imp = v["importances"].as_array().expect("importances array");
    assert_eq!(imp.len(), 12);
}
