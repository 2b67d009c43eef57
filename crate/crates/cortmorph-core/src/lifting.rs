//! Between signed coefficient fields and probability measures: splitting
//! into normalized positive/negative parts, support truncation, and
//! mass-conserving deposition of transported clouds back onto the pyramid
//! grid.

use crate::error::{Error, Result};
use crate::gabor::PyramidGrid;
use crate::geometry::{CortexPoint, THETA_PERIOD};
use crate::math::{fabs, floor, log, wrap_canonical};
use alloc::vec;
use alloc::vec::Vec;

/// How transported mass is written back onto the grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SplatMode {
    /// Multilinear weights over the up-to-16 bracketing nodes in
    /// `(x, y, theta, sigma)`. Mass conserving and alias resistant.
    Multilinear,
    /// Round each coordinate to its nearest node, accumulating the whole
    /// weight there. Mirrors direct cell accumulation.
    Nearest,
}

/// A discrete probability measure on the lifted domain.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightedCloud {
    pub points: Vec<CortexPoint>,
    /// Positive weights summing to one.
    pub weights: Vec<f64>,
    /// Total mass carried before normalization.
    pub mass_scale: f64,
}

impl WeightedCloud {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn total_weight(&self) -> f64 {
        self.weights.iter().sum()
    }
}

/// The normalized positive and negative parts of one signed channel.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelSplit {
    pub pos: WeightedCloud,
    pub neg: WeightedCloud,
}

fn collect_part(
    values: &[f64],
    grid: &PyramidGrid,
    pick: impl Fn(f64) -> f64,
) -> Option<WeightedCloud> {
    let mut points = Vec::new();
    let mut weights = Vec::new();
    let mut total = 0.0;
    for (idx, &v) in values.iter().enumerate() {
        let w = pick(v);
        if w > 0.0 {
            let (m, o, n, k) = grid.unravel(idx);
            points.push(grid.embed(m, o, n, k));
            weights.push(w);
            total += w;
        }
    }
    if points.is_empty() {
        return None;
    }
    for w in &mut weights {
        *w /= total;
    }
    Some(WeightedCloud { points, weights, mass_scale: total })
}

/// Splits one signed channel into its normalized positive part and negated
/// negative part; `None` when either part has no support.
pub fn try_split_channel(values: &[f64], grid: &PyramidGrid) -> Option<ChannelSplit> {
    let pos = collect_part(values, grid, |v| if v > 0.0 { v } else { 0.0 })?;
    let neg = collect_part(values, grid, |v| if v < 0.0 { -v } else { 0.0 })?;
    Some(ChannelSplit { pos, neg })
}

/// Splits both channels of a lift, erroring if any of the four parts is
/// empty (the pipeline falls back to linear coefficient interpolation in
/// that case).
pub fn split_lift(
    lift: &crate::gabor::SignedLift,
    grid: &PyramidGrid,
) -> Result<(ChannelSplit, ChannelSplit)> {
    let even =
        try_split_channel(&lift.even, grid).ok_or(Error::EmptyMeasure("split_lift: even channel"))?;
    let odd =
        try_split_channel(&lift.odd, grid).ok_or(Error::EmptyMeasure("split_lift: odd channel"))?;
    Ok((even, odd))
}

/// Drops points lighter than `tau` times the maximum weight and
/// renormalizes; `mass_scale` is preserved.
pub fn truncate_support(cloud: &WeightedCloud, tau: f64) -> Result<WeightedCloud> {
    debug_assert!((0.0..1.0).contains(&tau) || tau == 0.0);
    if tau == 0.0 {
        return Ok(cloud.clone());
    }
    let max = cloud.weights.iter().cloned().fold(0.0, f64::max);
    let floor_w = tau * max;
    let mut points = Vec::new();
    let mut weights = Vec::new();
    let mut total = 0.0;
    for (p, &w) in cloud.points.iter().zip(&cloud.weights) {
        if w >= floor_w {
            points.push(*p);
            weights.push(w);
            total += w;
        }
    }
    if points.is_empty() {
        return Err(Error::EmptyMeasure("truncate_support"));
    }
    for w in &mut weights {
        *w /= total;
    }
    Ok(WeightedCloud { points, weights, mass_scale: cloud.mass_scale })
}

/// Bracketing nodes along one axis with their interpolation weights.
/// Coordinates closer than a snap tolerance to a node collapse onto it.
#[inline]
fn axis_nodes(u: f64, last: usize, wrap_count: Option<usize>) -> [(usize, f64); 2] {
    const SNAP: f64 = 1e-9;
    let i0 = floor(u);
    let frac = u - i0;
    let i0 = i0 as usize;
    if frac <= SNAP {
        return [(i0, 1.0), (i0, 0.0)];
    }
    if frac >= 1.0 - SNAP {
        let next = match wrap_count {
            Some(d) => (i0 + 1) % d,
            None => (i0 + 1).min(last),
        };
        return [(next, 1.0), (next, 0.0)];
    }
    let i1 = match wrap_count {
        Some(d) => (i0 + 1) % d,
        None => (i0 + 1).min(last),
    };
    [(i0, 1.0 - frac), (i1, frac)]
}

/// Splats a cloud onto the pyramid grid, returning a nonnegative field in
/// grid layout whose total equals the cloud's total weight.
///
/// `x, y` are clamped into the level's spatial range, `theta` wraps with
/// period pi, and `sigma` interpolates log-linearly between level scales
/// (clamped to the level range). With [`SplatMode::Nearest`] the whole
/// weight goes to the nearest node along every axis.
pub fn deposit_to_grid(cloud: &WeightedCloud, grid: &PyramidGrid, mode: SplatMode) -> Vec<f64> {
    let mut field = vec![0.0; grid.len()];
    let levels = grid.levels();
    let d = grid.orientations().len();
    let theta_step = grid.theta_step();
    let last_level = levels.len() - 1;

    for (p, &w) in cloud.points.iter().zip(&cloud.weights) {
        // sigma axis: log-linear between bracketing levels
        let sigma = p.sigma.clamp(levels[0].sigma, levels[last_level].sigma);
        let (mut m0, mut ws) = (last_level, 1.0);
        for m in 0..last_level {
            if sigma <= levels[m + 1].sigma {
                m0 = m;
                ws = 1.0
                    - (log(sigma) - log(levels[m].sigma))
                        / (log(levels[m + 1].sigma) - log(levels[m].sigma));
                break;
            }
        }
        let sigma_nodes: [(usize, f64); 2] = if m0 == last_level {
            [(last_level, 1.0), (last_level, 0.0)]
        } else if ws >= 1.0 - 1e-12 {
            [(m0, 1.0), (m0, 0.0)]
        } else if ws <= 1e-12 {
            [(m0 + 1, 1.0), (m0 + 1, 0.0)]
        } else {
            [(m0, ws), (m0 + 1, 1.0 - ws)]
        };

        // theta axis: canonical angle over d wrapped slots
        let phi = wrap_canonical(p.theta, THETA_PERIOD);
        let theta_nodes = axis_nodes(phi / theta_step, d - 1, Some(d));

        let deposit = |field: &mut [f64], nodes: &[(usize, f64)]| {
            for &(m, wm) in nodes {
                if wm == 0.0 {
                    continue;
                }
                let level = &levels[m];
                let span = (level.positions - 1) as f64;
                let ux = (p.x / level.stride).clamp(0.0, span);
                let uy = (p.y / level.stride).clamp(0.0, span);
                let xs = axis_nodes(ux, level.positions - 1, None);
                let ys = axis_nodes(uy, level.positions - 1, None);
                for &(jt, wt) in &theta_nodes {
                    if wt == 0.0 {
                        continue;
                    }
                    let o = grid.slot_for_canonical(jt);
                    for &(n, wx) in &xs {
                        if wx == 0.0 {
                            continue;
                        }
                        for &(k, wy) in &ys {
                            if wy == 0.0 {
                                continue;
                            }
                            field[grid.index(m, o, n, k)] += w * wm * wt * wx * wy;
                        }
                    }
                }
            }
        };

        match mode {
            SplatMode::Multilinear => deposit(&mut field, &sigma_nodes),
            SplatMode::Nearest => {
                // collapse every axis to its heaviest node
                let m = heavier(sigma_nodes);
                let level = &levels[m];
                let span = (level.positions - 1) as f64;
                let n = heavier(axis_nodes(
                    (p.x / level.stride).clamp(0.0, span),
                    level.positions - 1,
                    None,
                ));
                let k = heavier(axis_nodes(
                    (p.y / level.stride).clamp(0.0, span),
                    level.positions - 1,
                    None,
                ));
                let o = grid.slot_for_canonical(heavier(theta_nodes));
                field[grid.index(m, o, n, k)] += w;
            }
        }
    }
    field
}

#[inline]
fn heavier(nodes: [(usize, f64); 2]) -> usize {
    if nodes[0].1 >= nodes[1].1 {
        nodes[0].0
    } else {
        nodes[1].0
    }
}

/// Recombines deposited positive and negative fields into a signed channel:
/// `m_pos * pos - m_neg * neg`.
pub fn recombine(pos_field: &[f64], neg_field: &[f64], m_pos: f64, m_neg: f64) -> Vec<f64> {
    debug_assert_eq!(pos_field.len(), neg_field.len());
    pos_field
        .iter()
        .zip(neg_field)
        .map(|(p, n)| m_pos * p - m_neg * n)
        .collect()
}

/// Checks that a cloud's weights are a probability vector.
pub fn assert_unit_mass(cloud: &WeightedCloud, tol: f64) -> bool {
    fabs(cloud.total_weight() - 1.0) <= tol && cloud.weights.iter().all(|&w| w > 0.0)
}
