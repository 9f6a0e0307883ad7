//! End-to-end runs of the `eigenprod` binary.

use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn eigenprod(args: &[&str], cache: Option<&Path>) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_eigenprod"));
    cmd.args(args).env_remove("EIGENPROD_CACHE");
    if let Some(c) = cache {
        cmd.env("EIGENPROD_CACHE", c);
    }
    cmd.output().expect("binary runs")
}

fn report(dir: &Path, name: &str) -> Value {
    let text = std::fs::read_to_string(dir.join(format!("{name}.json"))).unwrap();
    serde_json::from_str(&text).unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

#[test]
fn basis_lists_seven_modes() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let o = eigenprod(&["basis", "--model", "flat-torus", "--dim", "1", "--lambda-max", "3", "--out", out], None);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let stdout = String::from_utf8(o.stdout).unwrap();
    assert_eq!(stdout.lines().count(), 1);
    let r = report(dir.path(), "basis");
    let modes = r["result"]["modes"].as_array().unwrap();
    assert_eq!(modes.len(), 7);
    assert_eq!(modes[6]["name"], "sin3");
    assert_eq!(r["schema"], "eigenprod-report/1");
}

#[test]
fn truncate_cos2_cos3() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let args = ["truncate", "--model", "flat-torus", "--dim", "1", "--factors", "cos2,cos3", "--target", "0.99", "--out", out];
    let o = eigenprod(&args, None);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let t = &report(dir.path(), "truncate")["result"]["truncation"];
    assert_eq!(t["C5"].as_f64(), Some(1.0));
    assert!((t["captured_ratio"].as_f64().unwrap() - 1.0).abs() < 1e-12);
}

#[test]
fn rev_torus_decay_writes_all_views() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let args = [
        "decay", "--model", "rev-torus", "--R", "2", "--r", "1", "--factors", "1,2", "--lambda-max-mult", "6", "--out", out,
        "--csv", "--svg",
    ];
    let o = eigenprod(&args, None);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let r = report(dir.path(), "decay");
    let fit = &r["result"]["fit"];
    assert!(fit["c_hat"].as_f64().unwrap() > 0.0);
    assert!(fit["r_squared"].as_f64().unwrap() >= 0.9);
    assert_eq!(r["result"]["envelope_dominates"], true);
    // Regression snapshot of this run.
    assert!((fit["c_hat"].as_f64().unwrap() - 1.961345337).abs() < 1e-6);
    let csv = std::fs::read_to_string(dir.path().join("decay.csv")).unwrap();
    assert!(csv.lines().count() > 10);
    let svg = std::fs::read_to_string(dir.path().join("decay.svg")).unwrap();
    assert!(svg.contains("<svg") && svg.contains("class=\"fit\"") && svg.contains("log|c|"));
}

#[test]
fn warm_cache_matches_cold() {
    let dir = tempfile::tempdir().unwrap();
    let cache = dir.path().join("cache");
    let out = dir.path().join("out");
    let args = ["product", "--model", "rev-torus", "--factors", "1,3", "--out", out.to_str().unwrap()];
    let cold = eigenprod(&args, Some(&cache));
    assert_eq!(code(&cold), 0);
    let first = std::fs::read(out.join("product.json")).unwrap();
    let warm = eigenprod(&args, Some(&cache));
    assert_eq!(code(&warm), 0);
    assert!(String::from_utf8_lossy(&warm.stderr).contains("cache hit"));
    assert_eq!(first, std::fs::read(out.join("product.json")).unwrap());
    assert_eq!(std::fs::read_dir(&cache).unwrap().count(), 1);
}

#[test]
fn svg_output_is_byte_stable() {
    let dir = tempfile::tempdir().unwrap();
    let run = |sub: &str| {
        let out = dir.path().join(sub);
        let o = eigenprod(&["remark-s2", "--k-max", "10", "--svg", "--out", out.to_str().unwrap()], None);
        assert_eq!(code(&o), 0);
        std::fs::read(out.join("remark-s2.svg")).unwrap()
    };
    assert_eq!(run("a"), run("b"));
}

#[test]
fn replay_detects_tampering() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    assert_eq!(code(&eigenprod(&["extension-params", "--model", "flat-torus", "--out", out], None)), 0);
    let path = dir.path().join("extension-params.json");
    let ok = eigenprod(&["report", "--replay", path.to_str().unwrap()], None);
    assert_eq!(code(&ok), 0);
    assert!(String::from_utf8_lossy(&ok.stdout).starts_with("replay ok"));
    let text = std::fs::read_to_string(&path).unwrap().replacen("\"T\": 6.38", "\"T\": 6.39", 1);
    std::fs::write(&path, text).unwrap();
    assert_eq!(code(&eigenprod(&["report", "--replay", path.to_str().unwrap()], None)), 3);
}

#[test]
fn config_files_are_strict() {
    let dir = tempfile::tempdir().unwrap();
    let good = dir.path().join("run.toml");
    std::fs::write(
        &good,
        format!(
            "experiment = \"truncate\"\nfactors = [\"cos1\", \"cos1\"]\n\n[model]\nkind = \"flat-torus\"\nperiods = [6.283185307179586]\n\n[output]\ndir = {:?}\n",
            dir.path().join("o").to_str().unwrap()
        ),
    )
    .unwrap();
    assert_eq!(code(&eigenprod(&["report", "--config", good.to_str().unwrap()], None)), 0);
    assert!(dir.path().join("o/truncate.json").exists());

    let bad = dir.path().join("bad.toml");
    std::fs::write(&bad, "experiment = \"truncate\"\ntarget = 0.5\n").unwrap();
    let o = eigenprod(&["report", "--config", bad.to_str().unwrap()], None);
    assert_eq!(code(&o), 2);
    assert!(!String::from_utf8_lossy(&o.stderr).contains("panicked"));
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    // Validation failures.
    assert_eq!(code(&eigenprod(&["basis", "--model", "klein", "--lambda-max", "2"], None)), 2);
    assert_eq!(code(&eigenprod(&["frobnicate"], None)), 2);
    assert_eq!(code(&eigenprod(&["truncate", "--model", "flat-torus", "--factors", "cos9", "--lambda-max", "3", "--out", out], None)), 2);
    assert_eq!(code(&eigenprod(&["greens", "--model", "sphere", "--factors", "Y1_0,Y1_1", "--out", out], None)), 2);
    // Numerical breakdown: the threshold grid cannot isolate a factor's small values.
    let o = eigenprod(&["good-set", "--model", "flat-torus", "--factors", "cos1", "--a-grid", "0.0001", "--out", out], None);
    assert_eq!(code(&o), 3);
    assert!(String::from_utf8_lossy(&o.stderr).starts_with("error:"));
    // Unwritable output directory.
    let file = dir.path().join("plain-file");
    std::fs::write(&file, b"x").unwrap();
    let o = eigenprod(&["extension-params", "--model", "flat-torus", "--out", file.join("sub").to_str().unwrap()], None);
    assert_eq!(code(&o), 2);
}
