//! `cortmorph` — image morphing through a lifted cortical representation.
//!
//! Subcommands:
//! - `morph <I0> <I1> -o DIR` — transport the lifted coefficients of two
//!   images along anisotropic geodesics and write interpolated frames;
//! - `baseline <I0> <I1> -o DIR` — planar optimal-transport comparison;
//! - `verify [--seed N]` — numerically check the analytic identities;
//! - `calibrate <IMGS...>` — print the least-squares frame constant.
//!
//! Worker-thread count follows `RAYON_NUM_THREADS`; results are identical
//! for any thread count.

use clap::{Args, Parser, Subcommand};
use cortmorph::{config::RunConfig, output, Error};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "cortmorph", version, about = "cortical image morphing")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct ConfigArgs {
    /// Configuration file (flat `key = value` lines).
    #[arg(long)]
    config: Option<PathBuf>,

    /// Override a single configuration key, e.g. `--set epsilon=0.04`.
    /// May be repeated; applies after the file.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,

    /// Image side in pixels (shorthand for `--set image_size=N`).
    #[arg(long)]
    image_size: Option<usize>,

    /// Seed for randomized verification checks.
    #[arg(long)]
    seed: Option<u64>,
}

impl ConfigArgs {
    fn resolve(&self) -> cortmorph::Result<RunConfig> {
        let mut cfg = match &self.config {
            Some(path) => RunConfig::load(path)?,
            None => RunConfig::default(),
        };
        if let Some(size) = self.image_size {
            cfg.image_size = size;
        }
        if let Some(seed) = self.seed {
            cfg.seed = seed;
        }
        for kv in &self.overrides {
            let (key, value) = kv
                .split_once('=')
                .ok_or_else(|| Error::Usage(format!("--set expects KEY=VALUE, got `{kv}`")))?;
            cfg.set(key.trim(), value.trim())
                .map_err(|m| Error::Usage(format!("--set {kv}: {m}")))?;
        }
        Ok(cfg)
    }
}

#[derive(Subcommand)]
enum Command {
    /// Cortical morph between two images.
    Morph {
        i0: PathBuf,
        i1: PathBuf,
        /// Output directory for frames and the manifest.
        #[arg(short, long)]
        out: PathBuf,
        #[command(flatten)]
        config: ConfigArgs,
    },
    /// Planar optimal-transport baseline between two images.
    Baseline {
        i0: PathBuf,
        i1: PathBuf,
        #[arg(short, long)]
        out: PathBuf,
        #[command(flatten)]
        config: ConfigArgs,
    },
    /// Numerical verification of the analytic identities.
    Verify {
        #[command(flatten)]
        config: ConfigArgs,
    },
    /// Least-squares frame constant over a calibration set.
    Calibrate {
        images: Vec<PathBuf>,
        #[command(flatten)]
        config: ConfigArgs,
    },
}

fn run() -> cortmorph::Result<bool> {
    let cli = Cli::parse();
    match cli.command {
        Command::Morph { i0, i1, out, config } => {
            let cfg = config.resolve()?;
            let manifest = output::run_morph(&cfg, &i0, &i1, &out)?;
            println!("wrote {}", manifest.display());
            Ok(true)
        }
        Command::Baseline { i0, i1, out, config } => {
            let cfg = config.resolve()?;
            let manifest = output::run_baseline(&cfg, &i0, &i1, &out)?;
            println!("wrote {}", manifest.display());
            Ok(true)
        }
        Command::Verify { config } => {
            let cfg = config.resolve()?;
            output::run_verify_cmd(cfg.seed, std::io::stdout().lock())
        }
        Command::Calibrate { images, config } => {
            let cfg = config.resolve()?;
            let c = output::run_calibrate(&cfg, &images)?;
            println!("frame constant C = {c}");
            Ok(true)
        }
    }
}

fn main() -> ExitCode {
    match run() {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
