//! The morphing pipelines: the cortical morph through the lifted domain and
//! the planar optimal-transport baseline, plus the sigmoid sharpening stage
//! and binary shape metrics used to compare them.
//!
//! The cortical morph runs one entropic transport problem per channel and
//! sign (`even+`, `even-`, `odd+`, `odd-`), moves each plan along flow
//! geodesics, deposits the interpolated clouds back onto the pyramid grid,
//! recombines them with linearly interpolated masses, and projects through
//! the frame synthesis operator. Endpoint frames bypass transport entirely:
//! the geodesic at `t = 0` is the source measure, so the reconstruction
//! must coincide with the direct one.

use crate::error::{Error, Result};
use crate::gabor::{
    analyze, build_pyramid_grid, calibrate_frame_constant, synthesize, GaborParams, Image,
    PyramidGrid, SignedLift,
};
use crate::geometry::MetricParams;
use crate::lifting::{
    deposit_to_grid, truncate_support, try_split_channel, ChannelSplit, SplatMode, WeightedCloud,
};
use crate::math::exp;
use crate::transport::{build_cost_matrix, interpolate_plan, sinkhorn, CostMatrix, WEIGHT_FLOOR};
use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Full configuration of a morph run.
#[derive(Debug, Clone, PartialEq)]
pub struct MorphConfig {
    pub gabor: GaborParams,
    pub metric: MetricParams,
    /// Entropic regularization of the cortical transport.
    pub epsilon: f64,
    /// Sinkhorn sweep cap.
    pub n_iter: usize,
    /// Marginal-residual stopping tolerance.
    pub tol: f64,
    /// Relative support-truncation threshold.
    pub tau: f64,
    /// Interpolation times; sorted, within `[0, 1]`, containing both ends.
    pub times: Vec<f64>,
    pub sigmoid_k: f64,
    pub sigmoid_z0: f64,
    pub splat_mode: SplatMode,
    /// Regularization and sweep cap of the planar baseline.
    pub baseline_epsilon: f64,
    pub baseline_n_iter: usize,
}

impl MorphConfig {
    /// Reference defaults: `h1 = 0.7`, `h2 = 5`, `eps = 0.05`,
    /// `N_iter = 2000`, sigmoid `k = 30`, `z0 = 0.7`; baseline
    /// `eps = 0.01`, `N_iter = 1000`; times `{0, 1/4, 1/2, 3/4, 1}`.
    pub fn with_image_size(size: usize) -> Self {
        Self {
            gabor: GaborParams::with_image_size(size),
            metric: MetricParams::new(0.7, 5.0),
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
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.gabor.validate()?;
        if self.times.is_empty()
            || self.times.first() != Some(&0.0)
            || self.times.last() != Some(&1.0)
            || self.times.windows(2).any(|w| w[0] >= w[1])
            || self.times.iter().any(|t| !(0.0..=1.0).contains(t))
        {
            return Err(Error::Config(
                "times must be strictly increasing within [0, 1] and contain 0 and 1".into(),
            ));
        }
        if !(self.epsilon > 0.0) || !(self.baseline_epsilon > 0.0) {
            return Err(Error::Config("regularization must be positive".into()));
        }
        if !(0.0..1.0).contains(&self.tau) {
            return Err(Error::Config(format!("tau must lie in [0, 1), got {}", self.tau)));
        }
        Ok(())
    }
}

/// One rendered time step.
#[derive(Debug, Clone)]
pub struct Frame {
    pub t: f64,
    /// Synthesis output clamped into `[0, 1]`.
    pub raw: Image,
    /// Sigmoid-sharpened variant.
    pub sharpened: Image,
}

/// Transport diagnostics of one channel/sign leg.
#[derive(Debug, Clone)]
pub struct LegReport {
    pub support_src: usize,
    pub support_dst: usize,
    pub mass_src: f64,
    pub mass_dst: f64,
    pub sinkhorn_iterations: usize,
    pub sinkhorn_residual: f64,
    /// Per-time mass bookkeeping.
    pub frames: Vec<LegFrame>,
}

#[derive(Debug, Clone)]
pub struct LegFrame {
    pub t: f64,
    /// Linearly interpolated channel mass at `t`.
    pub mass_t: f64,
    /// Support size of the interpolated cloud (0 at bypassed endpoints).
    pub cloud_points: usize,
    /// Total mass after grid deposition (1 up to rounding, 0 at endpoints).
    pub deposited_mass: f64,
}

/// Diagnostics of one signed channel.
#[derive(Debug, Clone)]
pub struct ChannelReport {
    pub channel: &'static str,
    /// Whether optimal transport ran; `false` means linear fallback
    /// because a positive or negative part was empty at an endpoint.
    pub transported: bool,
    pub pos: Option<LegReport>,
    pub neg: Option<LegReport>,
}

#[derive(Debug, Clone)]
pub struct MorphDiagnostics {
    pub frame_constant: f64,
    pub channels: Vec<ChannelReport>,
}

#[derive(Debug, Clone)]
pub struct BaselineDiagnostics {
    pub support_src: usize,
    pub support_dst: usize,
    pub mass_src: f64,
    pub mass_dst: f64,
    pub sinkhorn_iterations: usize,
    pub sinkhorn_residual: f64,
}

#[derive(Debug, Clone)]
pub enum Diagnostics {
    Morph(MorphDiagnostics),
    Baseline(BaselineDiagnostics),
}

/// An ordered sequence of interpolation frames with run diagnostics.
#[derive(Debug, Clone)]
pub struct FrameSequence {
    pub frames: Vec<Frame>,
    pub diagnostics: Diagnostics,
}

/// Pixelwise logistic sharpening `z -> 1 / (1 + exp(-k (z - z0)))`.
pub fn sigmoid_threshold(img: &Image, k: f64, z0: f64) -> Image {
    let mut out = img.clone();
    for v in out.pixels_mut() {
        *v = 1.0 / (1.0 + exp(-k * (*v - z0)));
    }
    out
}

fn expect_morph_inputs(i0: &Image, i1: &Image, size: usize) -> Result<()> {
    i0.expect_square("morph: first input", size)?;
    i1.expect_square("morph: second input", size)?;
    for (name, img) in [("first", i0), ("second", i1)] {
        if img.pixels().iter().all(|&v| v == 0.0) {
            return Err(Error::Config(format!("morph: {name} input image is identically zero")));
        }
    }
    Ok(())
}

struct TransportedLeg {
    /// Deposited unit-mass fields per interior time index.
    fields: Vec<Option<Vec<f64>>>,
    report: LegReport,
}

/// Runs one sign leg: truncate, cost, Sinkhorn, interpolate and deposit at
/// every interior time.
fn run_leg(
    src: &WeightedCloud,
    dst: &WeightedCloud,
    cfg: &MorphConfig,
    grid: &PyramidGrid,
    tag: &str,
) -> Result<TransportedLeg> {
    let ctx = |e: Error| e.in_context(format!("morph channel {tag}"));
    let src_t = truncate_support(src, cfg.tau).map_err(|e| ctx(e))?;
    let dst_t = truncate_support(dst, cfg.tau).map_err(|e| ctx(e))?;
    let cost = build_cost_matrix(&src_t, &dst_t, &cfg.metric).map_err(|e| ctx(e))?;
    let plan = sinkhorn(&src_t.weights, &dst_t.weights, &cost, cfg.epsilon, cfg.n_iter, cfg.tol)
        .map_err(|e| ctx(e))?;

    let mut fields = Vec::with_capacity(cfg.times.len());
    let mut frames = Vec::with_capacity(cfg.times.len());
    for &t in &cfg.times {
        let mass_t = (1.0 - t) * src.mass_scale + t * dst.mass_scale;
        if t == 0.0 || t == 1.0 {
            fields.push(None);
            frames.push(LegFrame { t, mass_t, cloud_points: 0, deposited_mass: 0.0 });
            continue;
        }
        let cloud = interpolate_plan(&plan, &src_t, &dst_t, t, &cfg.metric).map_err(|e| ctx(e))?;
        let field = deposit_to_grid(&cloud, grid, cfg.splat_mode);
        let deposited: f64 = field.iter().sum();
        frames.push(LegFrame { t, mass_t, cloud_points: cloud.len(), deposited_mass: deposited });
        fields.push(Some(field));
    }

    Ok(TransportedLeg {
        fields,
        report: LegReport {
            support_src: src_t.len(),
            support_dst: dst_t.len(),
            mass_src: src.mass_scale,
            mass_dst: dst.mass_scale,
            sinkhorn_iterations: plan.iterations_run,
            sinkhorn_residual: plan.marginal_residual,
            frames,
        },
    })
}

/// Signed channel fields per time, either by transport of both signs or by
/// linear coefficient interpolation when a part is empty.
fn channel_fields(
    label: &'static str,
    values0: &[f64],
    values1: &[f64],
    split0: Option<ChannelSplit>,
    split1: Option<ChannelSplit>,
    cfg: &MorphConfig,
    grid: &PyramidGrid,
) -> Result<(Vec<Vec<f64>>, ChannelReport)> {
    if let (Some(s0), Some(s1)) = (split0, split1) {
        let pos = run_leg(&s0.pos, &s1.pos, cfg, grid, &format!("{label}+"))?;
        let neg = run_leg(&s0.neg, &s1.neg, cfg, grid, &format!("{label}-"))?;
        let mut out = Vec::with_capacity(cfg.times.len());
        for (ti, &t) in cfg.times.iter().enumerate() {
            if t == 0.0 {
                out.push(values0.to_vec());
            } else if t == 1.0 {
                out.push(values1.to_vec());
            } else {
                let mp = pos.report.frames[ti].mass_t;
                let mn = neg.report.frames[ti].mass_t;
                let fp = pos.fields[ti].as_ref().expect("interior time has a field");
                let fn_ = neg.fields[ti].as_ref().expect("interior time has a field");
                out.push(crate::lifting::recombine(fp, fn_, mp, mn));
            }
        }
        Ok((
            out,
            ChannelReport {
                channel: label,
                transported: true,
                pos: Some(pos.report),
                neg: Some(neg.report),
            },
        ))
    } else {
        // a part is empty at one endpoint: carry the whole channel linearly
        let out = cfg
            .times
            .iter()
            .map(|&t| {
                values0
                    .iter()
                    .zip(values1)
                    .map(|(a, b)| (1.0 - t) * a + t * b)
                    .collect::<Vec<f64>>()
            })
            .collect();
        Ok((out, ChannelReport { channel: label, transported: false, pos: None, neg: None }))
    }
}

/// The cortical morph: lifts both images, transports the four normalized
/// channel parts along flow geodesics, and reconstructs a frame per time.
pub fn morph(i0: &Image, i1: &Image, cfg: &MorphConfig) -> Result<FrameSequence> {
    cfg.validate()?;
    expect_morph_inputs(i0, i1, cfg.gabor.image_size)?;
    let grid = build_pyramid_grid(&cfg.gabor)?;
    let frame_constant = calibrate_frame_constant(&grid, &cfg.gabor, &[i0, i1])?;
    let lift0 = analyze(i0, &grid, &cfg.gabor)?;
    let lift1 = analyze(i1, &grid, &cfg.gabor)?;

    let (even_fields, even_report) = channel_fields(
        "even",
        &lift0.even,
        &lift1.even,
        try_split_channel(&lift0.even, &grid),
        try_split_channel(&lift1.even, &grid),
        cfg,
        &grid,
    )?;
    let (odd_fields, odd_report) = channel_fields(
        "odd",
        &lift0.odd,
        &lift1.odd,
        try_split_channel(&lift0.odd, &grid),
        try_split_channel(&lift1.odd, &grid),
        cfg,
        &grid,
    )?;

    let mut frames = Vec::with_capacity(cfg.times.len());
    for ((&t, even), odd) in cfg.times.iter().zip(even_fields).zip(odd_fields) {
        let lift = SignedLift { even, odd };
        let raw = synthesize(&lift, &grid, &cfg.gabor, frame_constant).clamped();
        let sharpened = sigmoid_threshold(&raw, cfg.sigmoid_k, cfg.sigmoid_z0);
        frames.push(Frame { t, raw, sharpened });
    }

    Ok(FrameSequence {
        frames,
        diagnostics: Diagnostics::Morph(MorphDiagnostics {
            frame_constant,
            channels: vec![even_report, odd_report],
        }),
    })
}

/// Pixel support of an image as a planar cloud (positions in pixel units).
fn pixel_cloud(img: &Image) -> (Vec<(f64, f64)>, Vec<f64>, f64) {
    let mut points = Vec::new();
    let mut weights = Vec::new();
    let mut total = 0.0;
    for y in 0..img.height() {
        for x in 0..img.width() {
            let v = img.get(x, y);
            if v > 0.0 {
                points.push((x as f64, y as f64));
                weights.push(v);
                total += v;
            }
        }
    }
    for w in &mut weights {
        *w /= total;
    }
    (points, weights, total)
}

fn squared_euclidean_cost(src: &[(f64, f64)], dst: &[(f64, f64)]) -> CostMatrix {
    let rows = src.len();
    let cols = dst.len();
    let fill = |i: usize| -> Vec<f64> {
        let (x0, y0) = src[i];
        dst.iter().map(|&(x1, y1)| (x1 - x0) * (x1 - x0) + (y1 - y0) * (y1 - y0)).collect()
    };
    #[cfg(feature = "parallel")]
    let rows_data: Vec<Vec<f64>> = (0..rows).into_par_iter().map(fill).collect();
    #[cfg(not(feature = "parallel"))]
    let rows_data: Vec<Vec<f64>> = (0..rows).map(fill).collect();
    let mut entries = Vec::with_capacity(rows * cols);
    for r in rows_data {
        entries.extend_from_slice(&r);
    }
    CostMatrix::from_entries(rows, cols, entries)
}

/// Bilinear splat of planar mass onto the pixel grid, clamped to the image.
fn deposit_planar(points: &[(f64, f64)], weights: &[f64], size: usize) -> Image {
    let mut img = Image::zeros(size, size);
    let span = (size - 1) as f64;
    for (&(x, y), &w) in points.iter().zip(weights) {
        let x = x.clamp(0.0, span);
        let y = y.clamp(0.0, span);
        let x0 = x as usize;
        let y0 = y as usize;
        let fx = x - x0 as f64;
        let fy = y - y0 as f64;
        let x1 = (x0 + 1).min(size - 1);
        let y1 = (y0 + 1).min(size - 1);
        img.set(x0, y0, img.get(x0, y0) + w * (1.0 - fx) * (1.0 - fy));
        img.set(x1, y0, img.get(x1, y0) + w * fx * (1.0 - fy));
        img.set(x0, y1, img.get(x0, y1) + w * (1.0 - fx) * fy);
        img.set(x1, y1, img.get(x1, y1) + w * fx * fy);
    }
    img
}

/// Planar regularized optimal transport between the images viewed as pixel
/// densities, with squared Euclidean cost and straight-line displacement
/// interpolation; the comparison baseline.
pub fn planar_baseline(i0: &Image, i1: &Image, cfg: &MorphConfig) -> Result<FrameSequence> {
    cfg.validate()?;
    expect_morph_inputs(i0, i1, cfg.gabor.image_size)?;
    let size = cfg.gabor.image_size;
    let (src_pts, src_w, mass0) = pixel_cloud(i0);
    let (dst_pts, dst_w, mass1) = pixel_cloud(i1);
    let cost = squared_euclidean_cost(&src_pts, &dst_pts);
    let plan = sinkhorn(&src_w, &dst_w, &cost, cfg.baseline_epsilon, cfg.baseline_n_iter, cfg.tol)
        .map_err(|e| e.in_context("planar_baseline"))?;

    let mut frames = Vec::with_capacity(cfg.times.len());
    for &t in &cfg.times {
        let raw = if t == 0.0 {
            i0.clone()
        } else if t == 1.0 {
            i1.clone()
        } else {
            let mut pts = Vec::new();
            let mut ws = Vec::new();
            for i in 0..plan.rows() {
                let (x0, y0) = src_pts[i];
                for (j, &w) in plan.row(i).iter().enumerate() {
                    if w <= WEIGHT_FLOOR {
                        continue;
                    }
                    let (x1, y1) = dst_pts[j];
                    pts.push(((1.0 - t) * x0 + t * x1, (1.0 - t) * y0 + t * y1));
                    ws.push(w);
                }
            }
            let total: f64 = ws.iter().sum();
            let mass_t = (1.0 - t) * mass0 + t * mass1;
            for w in &mut ws {
                *w *= mass_t / total;
            }
            deposit_planar(&pts, &ws, size).clamped()
        };
        let sharpened = sigmoid_threshold(&raw, cfg.sigmoid_k, cfg.sigmoid_z0);
        frames.push(Frame { t, raw, sharpened });
    }

    Ok(FrameSequence {
        frames,
        diagnostics: Diagnostics::Baseline(BaselineDiagnostics {
            support_src: src_pts.len(),
            support_dst: dst_pts.len(),
            mass_src: mass0,
            mass_dst: mass1,
            sinkhorn_iterations: plan.iterations_run,
            sinkhorn_residual: plan.marginal_residual,
        }),
    })
}

/// Binary overlap metrics between a frame and a reference.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShapeMetrics {
    pub iou: f64,
    pub area_frame: usize,
    pub area_reference: usize,
    pub components_frame: usize,
    pub components_reference: usize,
    /// Set when either binarized foreground is empty (IoU reported as 0).
    pub empty_foreground: bool,
}

/// Binarizes both images at `threshold` and reports intersection над union,
/// foreground areas, and 4-connected component counts.
pub fn shape_metrics(frame: &Image, reference: &Image, threshold: f64) -> Result<ShapeMetrics> {
    if frame.width() != reference.width() || frame.height() != reference.height() {
        return Err(Error::Shape {
            op: "shape_metrics",
            expected_w: reference.width(),
            expected_h: reference.height(),
            got_w: frame.width(),
            got_h: frame.height(),
        });
    }
    let fg_a = binarize(frame, threshold);
    let fg_b = binarize(reference, threshold);
    let mut inter = 0usize;
    let mut union = 0usize;
    let mut area_a = 0usize;
    let mut area_b = 0usize;
    for (a, b) in fg_a.iter().zip(&fg_b) {
        let (a, b) = (*a, *b);
        inter += (a && b) as usize;
        union += (a || b) as usize;
        area_a += a as usize;
        area_b += b as usize;
    }
    let empty = area_a == 0 || area_b == 0;
    let iou = if empty { 0.0 } else { inter as f64 / union as f64 };
    Ok(ShapeMetrics {
        iou,
        area_frame: area_a,
        area_reference: area_b,
        components_frame: component_count(&fg_a, frame.width()),
        components_reference: component_count(&fg_b, reference.width()),
        empty_foreground: empty,
    })
}

fn binarize(img: &Image, threshold: f64) -> Vec<bool> {
    img.pixels().iter().map(|&v| v >= threshold).collect()
}

/// Counts 4-connected foreground components by flood fill.
fn component_count(fg: &[bool], width: usize) -> usize {
    let height = fg.len() / width;
    let mut seen = vec![false; fg.len()];
    let mut stack = Vec::new();
    let mut count = 0;
    for start in 0..fg.len() {
        if !fg[start] || seen[start] {
            continue;
        }
        count += 1;
        seen[start] = true;
        stack.push(start);
        while let Some(idx) = stack.pop() {
            let (x, y) = (idx % width, idx / width);
            let mut push = |nx: usize, ny: usize| {
                let n = ny * width + nx;
                if fg[n] && !seen[n] {
                    seen[n] = true;
                    stack.push(n);
                }
            };
            if x > 0 {
                push(x - 1, y);
            }
            if x + 1 < width {
                push(x + 1, y);
            }
            if y > 0 {
                push(x, y - 1);
            }
            if y + 1 < height {
                push(x, y + 1);
            }
        }
    }
    count
}

/// Intensity centroid linearity check used by motion tests: maximum
/// deviation, in pixels, of per-frame centroids from the straight line
/// between the endpoint centroids.
pub fn centroid_linearity(frames: &[Frame]) -> Option<f64> {
    let first = crate::shapes::centroid(&frames.first()?.sharpened)?;
    let last = crate::shapes::centroid(&frames.last()?.sharpened)?;
    let mut worst = 0.0f64;
    for f in frames {
        let (cx, cy) = crate::shapes::centroid(&f.sharpened)?;
        let ex = (1.0 - f.t) * first.0 + f.t * last.0;
        let ey = (1.0 - f.t) * first.1 + f.t * last.1;
        worst = worst.max(crate::math::hypot(cx - ex, cy - ey));
    }
    Some(worst)
}
