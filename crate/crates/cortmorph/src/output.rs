//! Subcommand drivers: run the pipelines, write frame files and the
//! manifest, and print the verification report.

use crate::config::RunConfig;
use crate::manifest;
use crate::pgm;
use crate::{Error, Result};
use cortmorph_core::gabor::{analyze, build_pyramid_grid, calibrate_frame_constant};
use cortmorph_core::pipeline::{morph, planar_baseline, FrameSequence};
use cortmorph_core::verify::{run_verify, VerifyReport};
use cortmorph_core::Image;
use std::path::{Path, PathBuf};

/// Writes raw and sharpened frames as `frame_t{t:.2}_{raw,sharp}.pgm` plus
/// `manifest.json`; returns the manifest path.
pub fn save_sequence(seq: &FrameSequence, dir: &Path, cfg: &RunConfig) -> Result<PathBuf> {
    std::fs::create_dir_all(dir).map_err(Error::io(dir))?;
    let mut names = Vec::with_capacity(seq.frames.len());
    for frame in &seq.frames {
        let raw_name = format!("frame_t{:.2}_raw.pgm", frame.t);
        let sharp_name = format!("frame_t{:.2}_sharp.pgm", frame.t);
        pgm::write_pgm(&frame.raw, &dir.join(&raw_name))?;
        pgm::write_pgm(&frame.sharpened, &dir.join(&sharp_name))?;
        names.push((raw_name, sharp_name));
    }
    let manifest = manifest::build(seq, cfg, &names);
    let path = dir.join("manifest.json");
    let json = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
    std::fs::write(&path, json).map_err(Error::io(&path))?;
    Ok(path)
}

fn load_input(path: &Path, size: usize) -> Result<Image> {
    pgm::expect_size(pgm::load_image(path)?, path, size)
}

/// `morph <I0> <I1> -o DIR`: the cortical pipeline.
pub fn run_morph(cfg: &RunConfig, i0: &Path, i1: &Path, out: &Path) -> Result<PathBuf> {
    let a = load_input(i0, cfg.image_size)?;
    let b = load_input(i1, cfg.image_size)?;
    let seq = morph(&a, &b, &cfg.morph_config())?;
    save_sequence(&seq, out, cfg)
}

/// `baseline <I0> <I1> -o DIR`: planar optimal transport.
pub fn run_baseline(cfg: &RunConfig, i0: &Path, i1: &Path, out: &Path) -> Result<PathBuf> {
    let a = load_input(i0, cfg.image_size)?;
    let b = load_input(i1, cfg.image_size)?;
    let seq = planar_baseline(&a, &b, &cfg.morph_config())?;
    save_sequence(&seq, out, cfg)
}

/// `calibrate <imgs...>`: least-squares frame constant over a set.
pub fn run_calibrate(cfg: &RunConfig, paths: &[PathBuf]) -> Result<f64> {
    if paths.is_empty() {
        return Err(Error::Usage("calibrate requires at least one image".into()));
    }
    let params = cfg.gabor_params();
    let grid = build_pyramid_grid(&params)?;
    let mut images = Vec::with_capacity(paths.len());
    for p in paths {
        images.push(load_input(p, cfg.image_size)?);
    }
    let refs: Vec<&Image> = images.iter().collect();
    // exercise the analysis path before calibration so shape errors
    // surface with their file name
    for (img, p) in refs.iter().zip(paths) {
        analyze(img, &grid, &params).map_err(|e| {
            Error::Core(e.in_context(format!("calibrate {}", p.display())))
        })?;
    }
    Ok(calibrate_frame_constant(&grid, &params, &refs)?)
}

/// `verify [--seed N]`: prints one line per check; true when all passed.
pub fn run_verify_cmd(seed: u64, mut sink: impl std::io::Write) -> Result<bool> {
    let report: VerifyReport = run_verify(seed)?;
    for c in &report.checks {
        writeln!(
            sink,
            "[{}] {:28} value={:<12.4e} threshold={:.2e}  {}",
            if c.passed { "PASS" } else { "FAIL" },
            c.name,
            c.value,
            c.threshold,
            c.note
        )
        .map_err(Error::io("<stdout>"))?;
    }
    Ok(report.passed())
}
