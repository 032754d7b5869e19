use std::path::Path;
use std::process::Command;

fn meanclt() -> Command {
    Command::new(env!("CARGO_BIN_EXE_meanclt"))
}

fn write(dir: &Path, name: &str, body: &str) -> std::path::PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, body).unwrap();
    p
}

#[test]
fn run_writes_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let prefix = dir.path().join("out");
    let cfg = write(
        dir.path(),
        "c.json",
        &format!(
            r#"{{"process": {{"kind": "doubling_map"}}, "observable": {{"cos": [1.0]}},
                "n_grid": [16, 64, 256], "reps": 200, "seed": 3,
                "targets": ["empirical_d1", "thm21", "rate_fit"], "output": {:?}}}"#,
            prefix
        ),
    );
    let out = meanclt().args(["run", "--config"]).arg(&cfg).env("MEANCLT_THREADS", "2").output().unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("rate fit"));
    let csv = std::fs::read_to_string(dir.path().join("out.csv")).unwrap();
    assert_eq!(csv.lines().count(), 4);
    let m: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("out.manifest.json")).unwrap()).unwrap();
    assert_eq!(m["schema_version"], 1);

    let rep = meanclt().arg("report").arg(dir.path().join("out.manifest.json")).output().unwrap();
    assert!(rep.status.success());
    let text = String::from_utf8_lossy(&rep.stdout);
    assert!(text.starts_with("process,f,seed,n,d1_normalized"));
    assert_eq!(text.lines().count(), 4);
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let bad = write(dir.path(), "bad.json", r#"{"process": {"kind": "doubling_map"}, "n_grid": [8, 4], "reps": 100, "seed": 1, "targets": ["thm21"]}"#);
    let out = meanclt().args(["run", "--config"]).arg(&bad).output().unwrap();
    assert_eq!(out.status.code(), Some(2));

    let degenerate = write(
        dir.path(),
        "zero.json",
        r#"{"process": {"kind": "doubling_map"}, "n_grid": [8, 16], "reps": 100, "seed": 1, "targets": ["empirical_d1"]}"#,
    );
    let out = meanclt().args(["run", "--config"]).arg(&degenerate).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("degenerate"));

    let out = meanclt().args(["preset", "no-such"]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    let out = meanclt().args(["report"]).arg(dir.path().join("missing.json")).output().unwrap();
    assert_eq!(out.status.code(), Some(3));
    let out = meanclt().args(["check-appendix", "--count", "20"]).env("MEANCLT_THREADS", "zero").output().unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn preset_and_appendix() {
    let dir = tempfile::tempdir().unwrap();
    let prefix = dir.path().join("iid");
    let out = meanclt()
        .args(["preset", "iid-rademacher-exact", "--n-max", "512", "--output"])
        .arg(&prefix)
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(dir.path().join("iid.csv").exists());

    let out = meanclt().args(["check-appendix", "--count", "50", "--seed", "4"]).output().unwrap();
    assert!(out.status.success());
    let r: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(r["covariance_passed"], 50);
}

#[test]
fn diagnose_prints_report() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "d.json",
        r#"{"process": {"kind": "doubling_map"}, "observable": {"cos": [0.0, 1.0]}, "n_grid": [8],
            "reps": 100, "seed": 1, "targets": ["thm22"], "kmax": 8}"#,
    );
    let out = meanclt().args(["diagnose", "--config"]).arg(&cfg).output().unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let r: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(r["theta"].as_array().unwrap().len(), 9);
    assert_eq!(r["mixing"][1]["trend"]["verdict"], "converging");
}
