//! End-to-end checks of the command-line interface.

use cortmorph::config::RunConfig;
use cortmorph::pgm;
use cortmorph_core::shapes;
use std::path::Path;
use std::process::Command;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_cortmorph"))
}

fn write_letters(dir: &Path, size: usize) -> (std::path::PathBuf, std::path::PathBuf) {
    let t = shapes::letter_t(size);
    let r = shapes::rotate_nearest(&t, std::f64::consts::FRAC_PI_4);
    let t_path = dir.join("t.pgm");
    let r_path = dir.join("r.pgm");
    pgm::write_pgm(&t, &t_path).unwrap();
    pgm::write_pgm(&r, &r_path).unwrap();
    (t_path, r_path)
}

#[test]
fn morph_subcommand_writes_sequence() {
    let dir = tempfile::tempdir().unwrap();
    let (t, r) = write_letters(dir.path(), 16);
    let out = dir.path().join("frames");
    let status = bin()
        .args(["morph"])
        .arg(&t)
        .arg(&r)
        .arg("-o")
        .arg(&out)
        .args(["--image-size", "16", "--set", "n_iter=60", "--set", "times=0,0.5,1"])
        .status()
        .unwrap();
    assert!(status.success());
    assert!(out.join("manifest.json").exists());
    assert!(out.join("frame_t0.50_sharp.pgm").exists());
}

#[test]
fn baseline_subcommand_writes_sequence() {
    let dir = tempfile::tempdir().unwrap();
    let (t, r) = write_letters(dir.path(), 16);
    let out = dir.path().join("frames");
    let status = bin()
        .args(["baseline"])
        .arg(&t)
        .arg(&r)
        .arg("-o")
        .arg(&out)
        .args(["--image-size", "16", "--set", "times=0,0.5,1", "--set", "baseline_n_iter=200"])
        .status()
        .unwrap();
    assert!(status.success());
    let manifest = std::fs::read_to_string(out.join("manifest.json")).unwrap();
    let json: serde_json::Value = serde_json::from_str(&manifest).unwrap();
    assert_eq!(json["kind"], "baseline");
}

#[test]
fn config_file_with_flag_override() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = RunConfig::default();
    cfg.image_size = 16;
    cfg.n_iter = 40;
    cfg.times = vec![0.0, 1.0];
    let cfg_path = dir.path().join("run.cfg");
    cfg.save(&cfg_path).unwrap();

    let (t, r) = write_letters(dir.path(), 16);
    let out = dir.path().join("frames");
    let status = bin()
        .args(["morph"])
        .arg(&t)
        .arg(&r)
        .arg("-o")
        .arg(&out)
        .arg("--config")
        .arg(&cfg_path)
        .args(["--set", "epsilon=0.07"])
        .status()
        .unwrap();
    assert!(status.success());
    let manifest = std::fs::read_to_string(out.join("manifest.json")).unwrap();
    let json: serde_json::Value = serde_json::from_str(&manifest).unwrap();
    assert_eq!(json["config"]["epsilon"].as_f64().unwrap(), 0.07);
    assert_eq!(json["config"]["n_iter"].as_u64().unwrap(), 40);
}

#[test]
fn missing_input_fails_with_nonzero_exit() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("frames");
    let output = bin()
        .args(["morph", "missing0.pgm", "missing1.pgm", "-o"])
        .arg(&out)
        .output()
        .unwrap();
    assert!(!output.status.success());
    assert!(String::from_utf8_lossy(&output.stderr).contains("missing0.pgm"));
}

#[test]
fn calibrate_prints_constant() {
    let dir = tempfile::tempdir().unwrap();
    let (t, _) = write_letters(dir.path(), 32);
    let output = bin().args(["calibrate"]).arg(&t).args(["--image-size", "32"]).output().unwrap();
    assert!(output.status.success());
    let text = String::from_utf8_lossy(&output.stdout);
    assert!(text.contains("frame constant C = 0.0"), "got: {text}");
}
