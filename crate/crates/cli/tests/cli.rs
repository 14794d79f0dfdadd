use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn spinloc(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_spinloc"))
        .args(args)
        .env("SPINLOC_THREADS", "2")
        .output()
        .expect("binary runs")
}

fn write_config(dir: &Path, text: &str) -> PathBuf {
    let p = dir.join("cfg.toml");
    fs::write(&p, text).unwrap();
    p
}

const SMALL: &str = r#"
kind = "spectrum"

[model]
gamma = 0.1
g = 0.5

[box]
radius = 10

[seeds]
base_seed = 3
n_seeds = 2
"#;

fn shipped(name: &str) -> String {
    format!("{}/../../configs/{name}.toml", env!("CARGO_MANIFEST_DIR"))
}

#[test]
fn shipped_configs_validate() {
    for name in ["spectrum", "match", "tunnel", "greens", "minami", "correlator"] {
        let out = spinloc(&["validate-config", "--config", &shipped(name)]);
        assert!(out.status.success(), "{name}: {}", String::from_utf8_lossy(&out.stderr));
        assert!(String::from_utf8_lossy(&out.stdout).contains(&format!("kind {name}")));
    }
}

#[test]
fn validation_errors_exit_1() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), &SMALL.replace("gamma = 0.1", "gamma = 0.1\ntypo = 1"));
    let out = spinloc(&["validate-config", "--config", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("typo"));

    let cfg = write_config(dir.path(), SMALL);
    let out = spinloc(&["spectrum", "--config", cfg.to_str().unwrap(), "--seeds", "0"]);
    assert_eq!(out.status.code(), Some(1));

    let out = spinloc(&["spectrum", "--config", "/nonexistent/cfg.toml"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn missing_output_dir_is_a_validation_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SMALL);
    let out = spinloc(&["spectrum", "--config", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("output_dir"));
}

#[test]
fn spectrum_run_writes_manifest_and_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SMALL);
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    for out_dir in [&a, &b] {
        let out = spinloc(&["spectrum", "--config", cfg.to_str().unwrap(), "--out", out_dir.to_str().unwrap()]);
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    }
    let csv_a = fs::read(a.join("spectrum.csv")).unwrap();
    assert_eq!(csv_a, fs::read(b.join("spectrum.csv")).unwrap());
    // 2 seeds x 21 sites
    assert_eq!(String::from_utf8_lossy(&csv_a).lines().count(), 1 + 2 * 21);
    let manifest: serde_json::Value = serde_json::from_slice(&fs::read(a.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["kind"], "spectrum");
    assert_eq!(manifest["seeds"].as_array().unwrap().len(), 2);
}

#[test]
fn subcommand_overrides_kind_and_seed_flags_apply() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SMALL);
    let out_dir = dir.path().join("m");
    let out = spinloc(&[
        "minami",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        out_dir.to_str().unwrap(),
        "--seeds",
        "5",
        "--base-seed",
        "11",
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let manifest: serde_json::Value = serde_json::from_slice(&fs::read(out_dir.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["kind"], "minami");
    assert_eq!(manifest["config"]["seeds"]["base_seed"], 11);
    assert_eq!(manifest["seeds"].as_array().unwrap().len(), 5);
    assert!(out_dir.join("spacing.csv").exists());
}

#[test]
fn per_seed_failures_exit_2() {
    // no pair reaches the overlap floor at this splitting floor, so every seed fails
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), &format!("{SMALL}\n[tunnel]\nmin_gap = 10.0\n"));
    let out_dir = dir.path().join("t");
    let out = spinloc(&["tunnel", "--config", cfg.to_str().unwrap(), "--out", out_dir.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(out_dir.join("manifest.json").exists());
}
