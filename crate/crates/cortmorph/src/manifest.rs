//! The JSON manifest written next to every frame sequence: configuration
//! echo, per-channel masses and Sinkhorn diagnostics, and per-frame shape
//! metrics.

use crate::config::RunConfig;
use cortmorph_core::pipeline::{
    BaselineDiagnostics, ChannelReport, Diagnostics, FrameSequence, LegReport,
};
use cortmorph_core::{shapes, SplatMode};
use serde::Serialize;

#[derive(Debug, Serialize)]
pub struct Manifest {
    pub kind: &'static str,
    pub config: ConfigEcho,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub frame_constant: Option<f64>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub channels: Vec<ChannelEntry>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub baseline: Option<BaselineEntry>,
    pub frames: Vec<FrameEntry>,
}

/// Verbatim echo of the active configuration.
#[derive(Debug, Serialize)]
pub struct ConfigEcho {
    pub image_size: usize,
    pub gamma: f64,
    pub omega: f64,
    pub a0: f64,
    pub b0: f64,
    pub orientations: usize,
    pub sigma_min: f64,
    pub sigma_max: f64,
    pub h1: f64,
    pub h2: f64,
    pub epsilon: f64,
    pub n_iter: usize,
    pub tol: f64,
    pub tau: f64,
    pub times: Vec<f64>,
    pub sigmoid_k: f64,
    pub sigmoid_z0: f64,
    pub splat_mode: &'static str,
    pub baseline_epsilon: f64,
    pub baseline_n_iter: usize,
    pub seed: u64,
}

impl ConfigEcho {
    pub fn from_config(cfg: &RunConfig) -> Self {
        Self {
            image_size: cfg.image_size,
            gamma: cfg.gamma,
            omega: cfg.omega,
            a0: cfg.a0,
            b0: cfg.b0,
            orientations: cfg.orientations,
            sigma_min: cfg.sigma_min,
            sigma_max: cfg.sigma_max_value(),
            h1: cfg.h1,
            h2: cfg.h2,
            epsilon: cfg.epsilon,
            n_iter: cfg.n_iter,
            tol: cfg.tol,
            tau: cfg.tau,
            times: cfg.times.clone(),
            sigmoid_k: cfg.sigmoid_k,
            sigmoid_z0: cfg.sigmoid_z0,
            splat_mode: match cfg.splat_mode {
                SplatMode::Multilinear => "multilinear",
                SplatMode::Nearest => "nearest",
            },
            baseline_epsilon: cfg.baseline_epsilon,
            baseline_n_iter: cfg.baseline_n_iter,
            seed: cfg.seed,
        }
    }
}

#[derive(Debug, Serialize)]
pub struct ChannelEntry {
    pub channel: &'static str,
    pub transported: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub pos: Option<LegEntry>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub neg: Option<LegEntry>,
}

#[derive(Debug, Serialize)]
pub struct LegEntry {
    pub support_src: usize,
    pub support_dst: usize,
    pub mass_src: f64,
    pub mass_dst: f64,
    pub sinkhorn_iterations: usize,
    pub sinkhorn_residual: f64,
    pub mass_schedule: Vec<MassEntry>,
}

#[derive(Debug, Serialize)]
pub struct MassEntry {
    pub t: f64,
    pub mass: f64,
    pub cloud_points: usize,
    pub deposited_mass: f64,
}

#[derive(Debug, Serialize)]
pub struct BaselineEntry {
    pub support_src: usize,
    pub support_dst: usize,
    pub mass_src: f64,
    pub mass_dst: f64,
    pub sinkhorn_iterations: usize,
    pub sinkhorn_residual: f64,
}

#[derive(Debug, Serialize)]
pub struct FrameEntry {
    pub t: f64,
    pub raw: String,
    pub sharpened: String,
    /// Foreground metrics of the sharpened frame binarized at 0.5.
    pub foreground_area: usize,
    pub components: usize,
    pub iou_vs_first: f64,
    pub iou_vs_last: f64,
}

fn leg_entry(leg: &LegReport) -> LegEntry {
    LegEntry {
        support_src: leg.support_src,
        support_dst: leg.support_dst,
        mass_src: leg.mass_src,
        mass_dst: leg.mass_dst,
        sinkhorn_iterations: leg.sinkhorn_iterations,
        sinkhorn_residual: leg.sinkhorn_residual,
        mass_schedule: leg
            .frames
            .iter()
            .map(|f| MassEntry {
                t: f.t,
                mass: f.mass_t,
                cloud_points: f.cloud_points,
                deposited_mass: f.deposited_mass,
            })
            .collect(),
    }
}

fn channel_entry(ch: &ChannelReport) -> ChannelEntry {
    ChannelEntry {
        channel: ch.channel,
        transported: ch.transported,
        pos: ch.pos.as_ref().map(leg_entry),
        neg: ch.neg.as_ref().map(leg_entry),
    }
}

fn baseline_entry(b: &BaselineDiagnostics) -> BaselineEntry {
    BaselineEntry {
        support_src: b.support_src,
        support_dst: b.support_dst,
        mass_src: b.mass_src,
        mass_dst: b.mass_dst,
        sinkhorn_iterations: b.sinkhorn_iterations,
        sinkhorn_residual: b.sinkhorn_residual,
    }
}

/// Assembles the manifest for a saved sequence; `names` pairs each frame
/// with its `(raw, sharpened)` file names.
pub fn build(seq: &FrameSequence, cfg: &RunConfig, names: &[(String, String)]) -> Manifest {
    let (kind, frame_constant, channels, baseline) = match &seq.diagnostics {
        Diagnostics::Morph(d) => (
            "morph",
            Some(d.frame_constant),
            d.channels.iter().map(channel_entry).collect(),
            None,
        ),
        Diagnostics::Baseline(d) => ("baseline", None, Vec::new(), Some(baseline_entry(d))),
    };
    let first = &seq.frames.first().expect("sequence has frames").sharpened;
    let last = &seq.frames.last().expect("sequence has frames").sharpened;
    let frames = seq
        .frames
        .iter()
        .zip(names)
        .map(|(f, (raw, sharpened))| {
            let m = cortmorph_core::pipeline::shape_metrics(&f.sharpened, first, 0.5)
                .expect("frames share dimensions");
            let m_last = cortmorph_core::pipeline::shape_metrics(&f.sharpened, last, 0.5)
                .expect("frames share dimensions");
            let _ = shapes::centroid(&f.sharpened);
            FrameEntry {
                t: f.t,
                raw: raw.clone(),
                sharpened: sharpened.clone(),
                foreground_area: m.area_frame,
                components: m.components_frame,
                iou_vs_first: m.iou,
                iou_vs_last: m_last.iou,
            }
        })
        .collect();
    Manifest { kind, config: ConfigEcho::from_config(cfg), frame_constant, channels, baseline, frames }
}
