use std::path::{Path, PathBuf};
use std::process::Command;

use serde_json::Value;

fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_wfs")
}

fn configs() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn run(cmd: &str, config: &Path, out: &Path, extra: &[&str]) -> (i32, String) {
    let o = Command::new(bin()).args([cmd, "--config"]).arg(config).arg("--out").arg(out).args(extra).output().unwrap();
    (o.status.code().unwrap(), String::from_utf8_lossy(&o.stderr).into_owned())
}

fn summary(out: &Path, cmd: &str) -> serde_json::Map<String, Value> {
    let text = std::fs::read_to_string(out.join(format!("{cmd}.summary.json"))).unwrap();
    match serde_json::from_str(&text).unwrap() {
        Value::Object(m) => m,
        _ => panic!("summary is not an object"),
    }
}

#[test]
fn unit_weight_has_ap_one() {
    let dir = tempfile::tempdir().unwrap();
    let (code, err) = run("ap-constant", &configs().join("ap-constant.json"), dir.path(), &[]);
    assert_eq!(code, 0, "{err}");
    let s = summary(dir.path(), "ap-constant");
    assert_eq!(s["ap"], Value::from(1.0));
    assert_eq!(s["passed"], Value::Bool(true));
}

#[test]
fn fs_check_writes_one_row_per_seed() {
    let dir = tempfile::tempdir().unwrap();
    let (code, err) = run("fs-check", &configs().join("fs-check.json"), dir.path(), &["--plots"]);
    assert_eq!(code, 0, "{err}");
    let mut rdr = csv::Reader::from_path(dir.path().join("fs-check.csv")).unwrap();
    let rows: Vec<csv::StringRecord> = rdr.records().map(|r| r.unwrap()).collect();
    assert_eq!(rows.len(), 200);
    assert_eq!(&rows[0][0], "7");
    assert!(dir.path().join("fs-check.svg").exists());
    let s = summary(dir.path(), "fs-check");
    assert!(s["stability"].as_f64().unwrap() <= 1.25);
}

#[test]
fn malformed_and_unknown_fields_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, "{ not json").unwrap();
    assert_eq!(run("ap-constant", &bad, dir.path(), &[]).0, 2);
    std::fs::write(&bad, r#"{"domain":{"kind":"euclidean_torus","d":1,"extents":[[0,1]],"points":[8]},"lattice":{"n_max":3},"extra":0}"#).unwrap();
    assert_eq!(run("lattice-validate", &bad, dir.path(), &[]).0, 2);
    assert_eq!(run("ap-constant", &dir.path().join("missing.json"), dir.path(), &[]).0, 2);
    // a computation-level argument error is also a config problem
    std::fs::write(&bad, r#"{"domain":{"kind":"euclidean_torus","d":1,"extents":[[0,1]],"points":[8]},"weight":{"structure":"unit"},"p":0.5,"family":{"r0":0.125,"k_max":2}}"#).unwrap();
    assert_eq!(run("ap-constant", &bad, dir.path(), &[]).0, 2);
}

#[test]
fn failed_contract_exits_1() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("pde.json");
    let mut v: Value = serde_json::from_str(&std::fs::read_to_string(configs().join("pde-ratio.json")).unwrap()).unwrap();
    v["max_spread"] = Value::from(1.0001);
    std::fs::write(&cfg, v.to_string()).unwrap();
    let (code, err) = run("pde-ratio", &cfg, dir.path(), &[]);
    assert_eq!(code, 1, "{err}");
    assert!(err.contains("pde-ratio.summary.json"));
    assert_eq!(summary(dir.path(), "pde-ratio")["passed"], Value::Bool(false));
}

#[test]
fn violated_hypothesis_exits_1() {
    // support too wide for the small-support branch
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("fs.json");
    let mut v: Value = serde_json::from_str(&std::fs::read_to_string(configs().join("fs-check.json")).unwrap()).unwrap();
    v["regime"] = serde_json::json!({"kind": "small_support", "epsilon": 0.015625});
    std::fs::write(&cfg, v.to_string()).unwrap();
    let (code, err) = run("fs-check", &cfg, dir.path(), &[]);
    assert_eq!(code, 1);
    assert!(err.contains("member"), "{err}");
}

#[test]
fn usage_errors_exit_2() {
    let o = Command::new(bin()).arg("no-such-command").output().unwrap();
    assert_eq!(o.status.code(), Some(2));
    let o = Command::new(bin()).arg("fs-check").output().unwrap();
    assert_eq!(o.status.code(), Some(2));
}
