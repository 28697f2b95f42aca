use std::path::Path;
use std::process::{Command, Output};

fn sparsedyn(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sparsedyn")).args(args).output().unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn default_config() -> String {
    std::fs::read_to_string(Path::new(env!("CARGO_MANIFEST_DIR")).join("../../config/table1.toml")).unwrap()
}

#[test]
fn end_to_end_pipeline() {
    let dir = tempfile::tempdir().unwrap();
    let lib = dir.path().join("lib.podl");
    let out = sparsedyn(&["build-library", "--out", s(&lib)]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(lib.exists());
    assert!(dir.path().join("lib.podl.manifest").exists());

    let sw = dir.path().join("sw");
    let out = sparsedyn(&["experiment", "switching", "--lib", s(&lib), "--out-dir", s(&sw)]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let report = std::fs::read_to_string(sw.join("switching.csv")).unwrap();
    let predicted: Vec<&str> = report.lines().skip(1).map(|l| l.split(',').nth(2).unwrap()).collect();
    assert_eq!(predicted, ["1", "3", "5"]);

    // the measurement file written by the experiment classifies the same way
    let out = sparsedyn(&["classify", "--lib", s(&lib), "--measurements", s(&sw.join("measurements.csv"))]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let stdout = String::from_utf8(out.stdout).unwrap();
    let labels: Vec<&str> = stdout.lines().skip(1).map(|l| l.split(',').nth(1).unwrap()).collect();
    assert_eq!(labels, ["1", "3", "5"]);

    let mc = dir.path().join("mc");
    let args = ["experiment", "montecarlo", "--lib", s(&lib), "--out-dir", s(&mc), "--sigma", "0.2", "--trials", "20", "--sensors", "5", "--seed", "9"];
    assert!(sparsedyn(&args).status.success());
    let first = std::fs::read(mc.join("accuracy.csv")).unwrap();
    assert!(sparsedyn(&args).status.success());
    assert_eq!(first, std::fs::read(mc.join("accuracy.csv")).unwrap());
    assert_eq!(String::from_utf8(first).unwrap().lines().count(), 1 + 18);
}

#[test]
fn simulate_writes_snapshots() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("small.toml");
    let text = default_config()
        .replace("n = 1024", "n = 64")
        .replace("start = 40.0\nend = 80.0", "start = 1.0\nend = 2.0");
    std::fs::write(&cfg, text).unwrap();
    let out_csv = dir.path().join("snaps.csv");
    let out = sparsedyn(&["simulate", "--regime", "3", "--config", s(&cfg), "--out", s(&out_csv)]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = std::fs::read_to_string(out_csv).unwrap();
    assert!(text.starts_with("time,x,real,imag\n"));
    assert_eq!(text.lines().count(), 1 + 2 * 64);
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();

    let bad = dir.path().join("bad.toml");
    std::fs::write(&bad, "energy_threshold = 2.0").unwrap();
    assert_eq!(sparsedyn(&["build-library", "--config", s(&bad), "--out", "x"]).status.code(), Some(2));
    let unknown = sparsedyn(&["simulate", "--regime", "9", "--out", s(&dir.path().join("o.csv"))]);
    assert_eq!(unknown.status.code(), Some(2));
    assert_eq!(sparsedyn(&["classify", "--lib", "x", "--measurements", "y", "--solver", "magic"]).status.code(), Some(2));

    let missing = sparsedyn(&["classify", "--lib", s(&dir.path().join("none.podl")), "--measurements", "m.csv"]);
    assert_eq!(missing.status.code(), Some(4));

    // quintic and linear gain blow up in finite time
    let unstable = dir.path().join("unstable.toml");
    let text = default_config().replace("n = 1024", "n = 64").replace("eps = -0.1\ngamma = -0.1\ndescription = \"breather\"", "eps = 5.0\ngamma = 1.0\ndescription = \"breather\"");
    std::fs::write(&unstable, text).unwrap();
    let out = sparsedyn(&["simulate", "--regime", "3", "--config", s(&unstable), "--out", s(&dir.path().join("u.csv"))]);
    assert_eq!(out.status.code(), Some(3), "{}", String::from_utf8_lossy(&out.stderr));
}
