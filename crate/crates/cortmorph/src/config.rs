//! Run configuration: a flat key-value file with CLI-flag overrides.
//!
//! Defaults reproduce the reference runs: `image_size = 64`, `h1 = 0.7`,
//! `h2 = 5`, `epsilon = 0.05`, `n_iter = 2000`, sigmoid `k = 30`,
//! `z0 = 0.7`, `a0 = 2`, `b0 = 1`, `orientations = 8`,
//! `sigma_min = 1.1244`; `sigma_max` derives as `sigma_min log2(size)`
//! unless set explicitly.

use crate::{Error, Result};
use cortmorph_core::gabor::GaborParams;
use cortmorph_core::geometry::MetricParams;
use cortmorph_core::pipeline::MorphConfig;
use cortmorph_core::SplatMode;
use std::fmt::Write as _;
use std::path::Path;

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub image_size: usize,
    pub gamma: f64,
    pub omega: f64,
    pub a0: f64,
    pub b0: f64,
    pub orientations: usize,
    pub sigma_min: f64,
    /// Explicit scale ceiling; derived from the image size when absent.
    pub sigma_max: Option<f64>,
    pub h1: f64,
    pub h2: f64,
    pub epsilon: f64,
    pub n_iter: usize,
    pub tol: f64,
    pub tau: f64,
    pub times: Vec<f64>,
    pub sigmoid_k: f64,
    pub sigmoid_z0: f64,
    pub splat_mode: SplatMode,
    pub baseline_epsilon: f64,
    pub baseline_n_iter: usize,
    /// Seed of the randomized verification checks.
    pub seed: u64,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            image_size: 64,
            gamma: 2.0,
            omega: 0.47,
            a0: 2.0,
            b0: 1.0,
            orientations: 8,
            sigma_min: 1.1244,
            sigma_max: None,
            h1: 0.7,
            h2: 5.0,
            epsilon: 0.05,
            n_iter: 2000,
            tol: 1e-7,
            tau: 1e-4,
            times: vec![0.0, 0.25, 0.5, 0.75, 1.0],
            sigmoid_k: 30.0,
            sigmoid_z0: 0.7,
            splat_mode: SplatMode::Multilinear,
            baseline_epsilon: 0.01,
            baseline_n_iter: 1000,
            seed: 42,
        }
    }
}

impl RunConfig {
    pub fn sigma_max_value(&self) -> f64 {
        self.sigma_max.unwrap_or(self.sigma_min * (self.image_size as f64).log2())
    }

    pub fn gabor_params(&self) -> GaborParams {
        GaborParams {
            gamma: self.gamma,
            omega: self.omega,
            a0: self.a0,
            b0: self.b0,
            d: self.orientations,
            sigma_min: self.sigma_min,
            sigma_max: self.sigma_max_value(),
            image_size: self.image_size,
        }
    }

    pub fn morph_config(&self) -> MorphConfig {
        MorphConfig {
            gabor: self.gabor_params(),
            metric: MetricParams::new(self.h1, self.h2),
            epsilon: self.epsilon,
            n_iter: self.n_iter,
            tol: self.tol,
            tau: self.tau,
            times: self.times.clone(),
            sigmoid_k: self.sigmoid_k,
            sigmoid_z0: self.sigmoid_z0,
            splat_mode: self.splat_mode,
            baseline_epsilon: self.baseline_epsilon,
            baseline_n_iter: self.baseline_n_iter,
        }
    }

    /// Parses the flat key-value format. Lines are `key = value`; blank
    /// lines and `#` comments are skipped; unknown keys are rejected.
    pub fn parse(text: &str, path: &Path) -> Result<Self> {
        let mut cfg = RunConfig::default();
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let err = |message: String| Error::Config {
                path: path.to_path_buf(),
                line: idx + 1,
                message,
            };
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| err(format!("expected `key = value`, got `{line}`")))?;
            let key = key.trim();
            let value = value.trim();
            cfg.set(key, value).map_err(|m| err(m))?;
        }
        Ok(cfg)
    }

    /// Applies one `key = value` assignment (also used by flag overrides).
    pub fn set(&mut self, key: &str, value: &str) -> std::result::Result<(), String> {
        fn num<T: std::str::FromStr>(key: &str, value: &str) -> std::result::Result<T, String> {
            value.parse().map_err(|_| format!("invalid value `{value}` for {key}"))
        }
        match key {
            "image_size" => self.image_size = num(key, value)?,
            "gamma" => self.gamma = num(key, value)?,
            "omega" => self.omega = num(key, value)?,
            "a0" => self.a0 = num(key, value)?,
            "b0" => self.b0 = num(key, value)?,
            "orientations" => self.orientations = num(key, value)?,
            "sigma_min" => self.sigma_min = num(key, value)?,
            "sigma_max" => self.sigma_max = Some(num(key, value)?),
            "h1" => self.h1 = num(key, value)?,
            "h2" => self.h2 = num(key, value)?,
            "epsilon" => self.epsilon = num(key, value)?,
            "n_iter" => self.n_iter = num(key, value)?,
            "tol" => self.tol = num(key, value)?,
            "tau" => self.tau = num(key, value)?,
            "times" => {
                let mut times = Vec::new();
                for part in value.split(',') {
                    times.push(num("times", part.trim())?);
                }
                self.times = times;
            }
            "sigmoid_k" => self.sigmoid_k = num(key, value)?,
            "sigmoid_z0" => self.sigmoid_z0 = num(key, value)?,
            "splat_mode" => {
                self.splat_mode = match value {
                    "multilinear" => SplatMode::Multilinear,
                    "nearest" => SplatMode::Nearest,
                    other => return Err(format!("unknown splat_mode `{other}`")),
                }
            }
            "baseline_epsilon" => self.baseline_epsilon = num(key, value)?,
            "baseline_n_iter" => self.baseline_n_iter = num(key, value)?,
            "seed" => self.seed = num(key, value)?,
            other => return Err(format!("unknown key `{other}`")),
        }
        Ok(())
    }

    /// Serializes to the same flat format; `parse(serialize(c)) == c`.
    pub fn serialize(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "image_size = {}", self.image_size);
        let _ = writeln!(out, "gamma = {}", self.gamma);
        let _ = writeln!(out, "omega = {}", self.omega);
        let _ = writeln!(out, "a0 = {}", self.a0);
        let _ = writeln!(out, "b0 = {}", self.b0);
        let _ = writeln!(out, "orientations = {}", self.orientations);
        let _ = writeln!(out, "sigma_min = {}", self.sigma_min);
        if let Some(s) = self.sigma_max {
            let _ = writeln!(out, "sigma_max = {s}");
        }
        let _ = writeln!(out, "h1 = {}", self.h1);
        let _ = writeln!(out, "h2 = {}", self.h2);
        let _ = writeln!(out, "epsilon = {}", self.epsilon);
        let _ = writeln!(out, "n_iter = {}", self.n_iter);
        let _ = writeln!(out, "tol = {}", self.tol);
        let _ = writeln!(out, "tau = {}", self.tau);
        let times: Vec<String> = self.times.iter().map(|t| t.to_string()).collect();
        let _ = writeln!(out, "times = {}", times.join(","));
        let _ = writeln!(out, "sigmoid_k = {}", self.sigmoid_k);
        let _ = writeln!(out, "sigmoid_z0 = {}", self.sigmoid_z0);
        let mode = match self.splat_mode {
            SplatMode::Multilinear => "multilinear",
            SplatMode::Nearest => "nearest",
        };
        let _ = writeln!(out, "splat_mode = {mode}");
        let _ = writeln!(out, "baseline_epsilon = {}", self.baseline_epsilon);
        let _ = writeln!(out, "baseline_n_iter = {}", self.baseline_n_iter);
        let _ = writeln!(out, "seed = {}", self.seed);
        out
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(Error::io(path))?;
        Self::parse(&text, path)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.serialize()).map_err(Error::io(path))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::path::PathBuf;

    #[test]
    fn roundtrip_default_and_modified() {
        let path = PathBuf::from("test.cfg");
        let cfg = RunConfig::default();
        assert_eq!(RunConfig::parse(&cfg.serialize(), &path).unwrap(), cfg);

        let mut cfg = RunConfig::default();
        cfg.image_size = 32;
        cfg.sigma_max = Some(4.75);
        cfg.times = vec![0.0, 0.1, 0.9, 1.0];
        cfg.splat_mode = SplatMode::Nearest;
        cfg.epsilon = 0.013;
        assert_eq!(RunConfig::parse(&cfg.serialize(), &path).unwrap(), cfg);
    }

    #[test]
    fn rejects_unknown_keys_and_bad_values() {
        let path = PathBuf::from("test.cfg");
        assert!(RunConfig::parse("unknown_key = 3", &path).is_err());
        assert!(RunConfig::parse("epsilon = banana", &path).is_err());
        assert!(RunConfig::parse("epsilon 0.05", &path).is_err());
    }

    #[test]
    fn comments_and_blanks_are_ignored() {
        let path = PathBuf::from("test.cfg");
        let cfg =
            RunConfig::parse("# comment\n\nepsilon = 0.08  # trailing\n", &path).unwrap();
        assert_eq!(cfg.epsilon, 0.08);
    }

    #[test]
    fn sigma_max_derives_from_image_size() {
        let mut cfg = RunConfig::default();
        cfg.image_size = 64;
        assert!((cfg.sigma_max_value() - 1.1244 * 6.0).abs() < 1e-12);
        cfg.sigma_max = Some(3.0);
        assert_eq!(cfg.sigma_max_value(), 3.0);
    }
}
