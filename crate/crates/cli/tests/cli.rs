use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn riskscout(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_riskscout")).args(args).output().unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exited normally")
}

fn write_spec(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p.display().to_string()
}

const SMALL: &str = "campaign small {
  iterations = 20; seed = 3;
  var RS : structural range [0, 9] step 1 delta 1;
  var P : environmental range [0, 100] step 25 delta 5;
  var blur : fault range [0, 1];
  var occlusion : fault range [0, 1];
  sampler rns;
}
";

#[test]
fn validate_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let good = write_spec(dir.path(), "good.campaign", SMALL);
    let o = riskscout(&["validate", "--spec", &good]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    assert!(String::from_utf8_lossy(&o.stdout).starts_with("ok: campaign `small`"));

    let bad = write_spec(dir.path(), "bad.campaign", "campaign m { var P : environmental\n range [100, 0]; sampler random; }");
    let o = riskscout(&["validate", "--spec", &bad]);
    assert_eq!(code(&o), 1);
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("bad.campaign:2:2") && err.contains("range lower exceeds upper"), "{err}");
}

#[test]
fn missing_landscape_is_a_validation_error() {
    let dir = tempfile::tempdir().unwrap();
    let spec = write_spec(
        dir.path(),
        "s.campaign",
        "campaign m { evaluator = \"nowhere.landscape\"; var P : environmental range [0, 1]; sampler random; }",
    );
    let o = riskscout(&["validate", "--spec", &spec]);
    assert_eq!(code(&o), 1);
    assert!(String::from_utf8_lossy(&o.stderr).contains("nowhere.landscape"));
    assert_eq!(code(&riskscout(&["validate", "--spec", "/no/such/spec.campaign"])), 1);
    let out = dir.path().join("o");
    assert_eq!(code(&riskscout(&["run", "--spec", &spec, "--out", out.to_str().unwrap()])), 1);
}

#[test]
fn usage_errors_exit_one() {
    assert_eq!(code(&riskscout(&["run"])), 1);
    assert_eq!(code(&riskscout(&["frobnicate"])), 1);
    assert_eq!(code(&riskscout(&["--help"])), 0);
}

#[test]
fn run_applies_overrides_and_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let spec = write_spec(dir.path(), "s.campaign", SMALL);
    let mut csvs = Vec::new();
    for i in 0..2 {
        let out = dir.path().join(format!("out{i}"));
        let o = riskscout(&[
            "run", "--spec", &spec, "--out", out.to_str().unwrap(), "--sampler", "gbo", "--iterations", "12", "--seed", "9",
            "--deterministic-time",
        ]);
        assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
        csvs.push(fs::read(out.join("records.csv")).unwrap());
        let summary: serde_json::Value = serde_json::from_slice(&fs::read(out.join("summary.json")).unwrap()).unwrap();
        assert_eq!(summary["sampler"], "gbo");
        assert_eq!(summary["seed"], 9);
        assert_eq!(summary["records"], 12);
        assert_eq!(summary["aggregates"]["total_time_ms"], 0.0);
    }
    assert_eq!(csvs[0], csvs[1]);
    let text = String::from_utf8(csvs.remove(0)).unwrap();
    assert_eq!(text.lines().count(), 13);
    assert_eq!(text.lines().next().unwrap(), "iteration,RS,P,blur,occlusion,rs,is,s_risk,high_risk,elapsed_ms");
}

#[test]
fn run_rejects_bad_overrides() {
    let dir = tempfile::tempdir().unwrap();
    let spec = write_spec(dir.path(), "s.campaign", SMALL);
    let out = dir.path().join("o");
    let out = out.to_str().unwrap();
    assert_eq!(code(&riskscout(&["run", "--spec", &spec, "--out", out, "--sampler", "annealing"])), 1);
    assert_eq!(code(&riskscout(&["run", "--spec", &spec, "--out", out, "--iterations", "0"])), 1);
    let bad = write_spec(dir.path(), "bad.campaign", "campaign m { var P : environmental range [0, 1]; }");
    assert_eq!(code(&riskscout(&["run", "--spec", &bad, "--out", out])), 1);
}

#[test]
fn metrics_recomputes_and_detects_tampering() {
    let dir = tempfile::tempdir().unwrap();
    let spec = write_spec(dir.path(), "s.campaign", SMALL);
    let out = dir.path().join("out");
    assert_eq!(code(&riskscout(&["run", "--spec", &spec, "--out", out.to_str().unwrap()])), 0);
    let o = riskscout(&["metrics", "--results", out.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let printed: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    let summary: serde_json::Value = serde_json::from_slice(&fs::read(out.join("summary.json")).unwrap()).unwrap();
    assert_eq!(printed, summary["aggregates"]);

    let path = out.join("summary.json");
    let text = fs::read_to_string(&path).unwrap();
    let trs = summary["aggregates"]["trs"].to_string();
    fs::write(&path, text.replacen(&format!("\"trs\": {trs}"), "\"trs\": 123.0", 1)).unwrap();
    assert_eq!(code(&riskscout(&["metrics", "--results", out.to_str().unwrap()])), 2);
    assert_eq!(code(&riskscout(&["metrics", "--results", dir.path().join("absent").to_str().unwrap()])), 2);
}

#[test]
fn compare_writes_a_ranked_report() {
    let dir = tempfile::tempdir().unwrap();
    let spec = write_spec(dir.path(), "s.campaign", SMALL);
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    assert_eq!(code(&riskscout(&["run", "--spec", &spec, "--out", a.to_str().unwrap(), "--sampler", "random"])), 0);
    assert_eq!(code(&riskscout(&["run", "--spec", &spec, "--out", b.to_str().unwrap()])), 0);
    let report = dir.path().join("cmp.json");
    let joined = format!("{},{}", a.display(), b.display());
    let o = riskscout(&["compare", "--results", &joined, "--out", report.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let json: serde_json::Value = serde_json::from_slice(&fs::read(&report).unwrap()).unwrap();
    let rows = json["rows"].as_array().unwrap();
    assert_eq!(rows.len(), 2);
    assert!(rows[0]["trs"].as_f64().unwrap() >= rows[1]["trs"].as_f64().unwrap());
    assert_eq!(String::from_utf8_lossy(&o.stdout).lines().count(), 3);

    let o = riskscout(&["compare", "--results", a.to_str().unwrap(), "--out", report.to_str().unwrap()]);
    assert_eq!(code(&o), 1);
}

#[test]
fn sweep_writes_per_sampler_runs() {
    let dir = tempfile::tempdir().unwrap();
    let spec = write_spec(dir.path(), "s.campaign", &SMALL.replace("iterations = 20", "iterations = 8"));
    let out = dir.path().join("sweep");
    let o = riskscout(&["sweep", "--spec", &spec, "--seeds", "2", "--out", out.to_str().unwrap(), "--deterministic-time"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let report: serde_json::Value = serde_json::from_slice(&fs::read(out.join("sweep.json")).unwrap()).unwrap();
    let samplers: Vec<&str> = report["rows"].as_array().unwrap().iter().map(|r| r["sampler"].as_str().unwrap()).collect();
    assert_eq!(samplers, ["random", "grid", "halton", "rns", "gbo"]);
    assert!(out.join("halton/seed_4/records.csv").exists());
    assert_eq!(code(&riskscout(&["sweep", "--spec", &spec, "--seeds", "0", "--out", out.to_str().unwrap()])), 1);
}

#[test]
fn sweep_skips_grid_without_steps() {
    let dir = tempfile::tempdir().unwrap();
    let spec = write_spec(
        dir.path(),
        "s.campaign",
        "campaign m { iterations = 4; var RS : structural range [0, 9] delta 1; var P : environmental range [0, 100]; var blur : fault range [0, 1]; var occlusion : fault range [0, 1]; sampler random; }",
    );
    let out = dir.path().join("sweep");
    let o = riskscout(&["sweep", "--spec", &spec, "--seeds", "1", "--out", out.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    assert!(String::from_utf8_lossy(&o.stderr).contains("skipping grid"));
}
