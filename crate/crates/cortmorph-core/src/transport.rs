//! Entropic optimal transport between weighted clouds under the squared
//! flow distance, and displacement interpolation of the resulting plans.
//!
//! The Sinkhorn iteration runs in the log domain on the dual potentials:
//! with cost scales around `10^2` and regularization down to `10^-2`, the
//! scaling-form kernel `exp(-C / eps)` underflows, while potential updates
//! through log-sum-exp stay finite.

use crate::error::{Error, Result};
use crate::geometry::{dc_distance, Geodesic, MetricParams};
use crate::lifting::WeightedCloud;
use crate::math::{exp, fabs, log};
use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Plan entries below this value are dropped during interpolation.
pub const WEIGHT_FLOOR: f64 = 1e-12;

/// Log-sum-exp terms this far below the running maximum contribute less
/// than `exp(-45) ~ 3e-20` relatively and are skipped without evaluating
/// the exponential. At the small regularizations this pipeline runs,
/// almost every cost entry falls under the cutoff.
const EXP_CUTOFF: f64 = -45.0;

/// Dense matrix of squared flow distances between two supports.
#[derive(Debug, Clone, PartialEq)]
pub struct CostMatrix {
    rows: usize,
    cols: usize,
    entries: Vec<f64>,
}

impl CostMatrix {
    pub fn from_entries(rows: usize, cols: usize, entries: Vec<f64>) -> Self {
        assert_eq!(entries.len(), rows * cols);
        Self { rows, cols, entries }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.entries[i * self.cols + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.entries[i * self.cols..(i + 1) * self.cols]
    }

    pub fn entries(&self) -> &[f64] {
        &self.entries
    }
}

/// Builds the cost matrix `C_ij = d_c(p_i, q_j)^2`.
pub fn build_cost_matrix(
    src: &WeightedCloud,
    dst: &WeightedCloud,
    m: &MetricParams,
) -> Result<CostMatrix> {
    let rows = src.len();
    let cols = dst.len();
    debug_assert!(rows > 0 && cols > 0, "cost matrix needs nonempty supports");

    let fill_row = |i: usize| -> Result<Vec<f64>> {
        let p = &src.points[i];
        let mut row = Vec::with_capacity(cols);
        for q in &dst.points {
            let d = dc_distance(p, q, m)?;
            row.push(d * d);
        }
        Ok(row)
    };

    #[cfg(feature = "parallel")]
    let rows_data: Result<Vec<Vec<f64>>> = (0..rows).into_par_iter().map(fill_row).collect();
    #[cfg(not(feature = "parallel"))]
    let rows_data: Result<Vec<Vec<f64>>> = (0..rows).map(fill_row).collect();

    let mut entries = Vec::with_capacity(rows * cols);
    for row in rows_data? {
        entries.extend_from_slice(&row);
    }
    Ok(CostMatrix { rows, cols, entries })
}

/// An entropically regularized coupling with convergence diagnostics.
#[derive(Debug, Clone)]
pub struct TransportPlan {
    rows: usize,
    cols: usize,
    matrix: Vec<f64>,
    pub epsilon: f64,
    pub iterations_run: usize,
    pub marginal_residual: f64,
}

impl TransportPlan {
    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.matrix[i * self.cols + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.matrix[i * self.cols..(i + 1) * self.cols]
    }

    /// Row marginals `P 1`.
    pub fn row_marginals(&self) -> Vec<f64> {
        (0..self.rows).map(|i| self.row(i).iter().sum()).collect()
    }

    /// Column marginals `P^T 1`.
    pub fn col_marginals(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.cols];
        for i in 0..self.rows {
            for (j, v) in self.row(i).iter().enumerate() {
                out[j] += v;
            }
        }
        out
    }

    /// Linear transport cost `<P, C>`.
    pub fn transport_cost(&self, c: &CostMatrix) -> f64 {
        debug_assert_eq!((self.rows, self.cols), (c.rows, c.cols));
        crate::math::dot(&self.matrix, &c.entries)
    }
}

/// Fixed row-chunk length for parallel reductions; keeping it independent
/// of the thread count makes floating-point results thread-count invariant.
const CHUNK: usize = 64;

/// Running log-sum-exp state.
#[derive(Clone, Copy)]
struct Lse {
    max: f64,
    sum: f64,
}

impl Lse {
    const EMPTY: Lse = Lse { max: f64::NEG_INFINITY, sum: 0.0 };

    /// Streams one term in; exponentials are skipped below [`EXP_CUTOFF`].
    #[inline]
    fn push(&mut self, v: f64) {
        if v > self.max {
            let shift = self.max - v;
            self.sum = if shift > EXP_CUTOFF { self.sum * exp(shift) + 1.0 } else { 1.0 };
            self.max = v;
        } else if v - self.max > EXP_CUTOFF {
            self.sum += exp(v - self.max);
        }
    }

    /// Merges another state in (used to combine row chunks in fixed order).
    #[inline]
    fn merge(&mut self, other: &Lse) {
        if other.max == f64::NEG_INFINITY {
            return;
        }
        if other.max > self.max {
            let shift = self.max - other.max;
            self.sum = other.sum
                + if shift > EXP_CUTOFF && self.sum > 0.0 { self.sum * exp(shift) } else { 0.0 };
            self.max = other.max;
        } else if other.max - self.max > EXP_CUTOFF {
            self.sum += other.sum * exp(other.max - self.max);
        }
    }

    #[inline]
    fn value(&self) -> f64 {
        self.max + log(self.sum)
    }
}

/// Log-domain Sinkhorn for `min <P, C> - eps H(P)` subject to marginals
/// `a` and `b`.
///
/// Stops at `n_iter` sweeps or once the maximum marginal residual falls
/// below `tol` (checked every ten sweeps). Returns the primal plan
/// `P = exp((f + g - C) / eps)` with the residual actually reached.
///
/// Internally the iteration runs on the scaled potentials `f/eps, g/eps`
/// against the precomputed kernel exponent `C/eps`, one streaming pass per
/// half-sweep.
pub fn sinkhorn(
    a: &[f64],
    b: &[f64],
    c: &CostMatrix,
    epsilon: f64,
    n_iter: usize,
    tol: f64,
) -> Result<TransportPlan> {
    if !(epsilon > 0.0) {
        return Err(Error::Config(format!("sinkhorn: epsilon must be positive, got {epsilon}")));
    }
    let (rows, cols) = (c.rows, c.cols);
    assert_eq!(a.len(), rows);
    assert_eq!(b.len(), cols);
    debug_assert!(a.iter().all(|&w| w > 0.0) && b.iter().all(|&w| w > 0.0));

    // scaled kernel exponent; f32 storage halves memory traffic and its
    // rounding (relative 6e-8 of the exponent) is far below every
    // tolerance this plan feeds into
    let kernel: Vec<f32> = c.entries.iter().map(|&v| (v / epsilon) as f32).collect();
    let krow = |i: usize| &kernel[i * cols..(i + 1) * cols];

    let log_a: Vec<f64> = a.iter().map(|&w| log(w)).collect();
    let log_b: Vec<f64> = b.iter().map(|&w| log(w)).collect();
    let mut f = vec![0.0; rows];
    let mut g = vec![0.0; cols];
    let mut iterations = 0;
    let mut residual = f64::INFINITY;

    for sweep in 1..=n_iter {
        // f_i <- log a_i - LSE_j(g_j - K_ij)
        let frow = |(i, fi): (usize, &mut f64)| {
            let kr = krow(i);
            let mut lse = Lse::EMPTY;
            for j in 0..cols {
                lse.push(g[j] - kr[j] as f64);
            }
            *fi = log_a[i] - lse.value();
        };
        #[cfg(feature = "parallel")]
        f.par_iter_mut().enumerate().map(|(i, v)| (i, v)).for_each(frow);
        #[cfg(not(feature = "parallel"))]
        f.iter_mut().enumerate().for_each(frow);

        // g_j <- log b_j - LSE_i(f_i - K_ij), streamed row-major in chunks
        let chunk_stats = |(start, chunk_rows): (usize, usize)| -> Vec<Lse> {
            let mut states = vec![Lse::EMPTY; cols];
            for i in start..start + chunk_rows {
                let kr = krow(i);
                let fi = f[i];
                for j in 0..cols {
                    states[j].push(fi - kr[j] as f64);
                }
            }
            states
        };
        let chunks: Vec<(usize, usize)> =
            (0..rows).step_by(CHUNK).map(|s| (s, CHUNK.min(rows - s))).collect();
        #[cfg(feature = "parallel")]
        let stats: Vec<Vec<Lse>> = chunks.into_par_iter().map(chunk_stats).collect();
        #[cfg(not(feature = "parallel"))]
        let stats: Vec<Vec<Lse>> = chunks.into_iter().map(chunk_stats).collect();
        let mut merged = vec![Lse::EMPTY; cols];
        for part in &stats {
            for (m, p) in merged.iter_mut().zip(part) {
                m.merge(p);
            }
        }
        for j in 0..cols {
            g[j] = log_b[j] - merged[j].value();
        }

        iterations = sweep;
        if f.iter().chain(g.iter()).any(|v| !v.is_finite()) {
            return Err(Error::SinkhornDiverged { iteration: sweep, epsilon });
        }
        if sweep % 10 == 0 || sweep == n_iter {
            residual = marginal_residual(&f, &g, a, b, &kernel, cols);
            if residual < tol {
                break;
            }
        }
    }

    let mut matrix = vec![0.0; rows * cols];
    for i in 0..rows {
        let kr = krow(i);
        let out = &mut matrix[i * cols..(i + 1) * cols];
        for j in 0..cols {
            let v = f[i] + g[j] - kr[j] as f64;
            if v > EXP_CUTOFF {
                out[j] = exp(v);
            }
        }
    }
    Ok(TransportPlan {
        rows,
        cols,
        matrix,
        epsilon,
        iterations_run: iterations,
        marginal_residual: residual,
    })
}

/// Maximum deviation of the primal marginals from `a` and `b`, on the
/// scaled potentials.
fn marginal_residual(f: &[f64], g: &[f64], a: &[f64], b: &[f64], kernel: &[f32], cols: usize) -> f64 {
    let mut worst = 0.0f64;
    let mut col_sums = vec![0.0; cols];
    for (i, &fi) in f.iter().enumerate() {
        let kr = &kernel[i * cols..(i + 1) * cols];
        let mut row_sum = 0.0;
        for j in 0..cols {
            let v = fi + g[j] - kr[j] as f64;
            if v > EXP_CUTOFF {
                let p = exp(v);
                row_sum += p;
                col_sums[j] += p;
            }
        }
        worst = worst.max(fabs(row_sum - a[i]));
    }
    for (j, &s) in col_sums.iter().enumerate() {
        worst = worst.max(fabs(s - b[j]));
    }
    worst
}

/// Displacement interpolation of a plan: every coupling entry above
/// [`WEIGHT_FLOOR`] moves along the geodesic between its endpoints, and the
/// surviving weights are renormalized to unit mass.
pub fn interpolate_plan(
    plan: &TransportPlan,
    src: &WeightedCloud,
    dst: &WeightedCloud,
    t: f64,
    m: &MetricParams,
) -> Result<WeightedCloud> {
    debug_assert!((0.0..=1.0).contains(&t));
    debug_assert_eq!(plan.rows(), src.len());
    debug_assert_eq!(plan.cols(), dst.len());

    let row_points = |i: usize| -> Result<(Vec<crate::geometry::CortexPoint>, Vec<f64>)> {
        let mut pts = Vec::new();
        let mut ws = Vec::new();
        let p = &src.points[i];
        for (j, &w) in plan.row(i).iter().enumerate() {
            if w <= WEIGHT_FLOOR {
                continue;
            }
            let geo = Geodesic::between(p, &dst.points[j], m)?;
            pts.push(geo.point(t));
            ws.push(w);
        }
        Ok((pts, ws))
    };

    #[cfg(feature = "parallel")]
    let parts: Result<Vec<_>> = (0..plan.rows()).into_par_iter().map(row_points).collect();
    #[cfg(not(feature = "parallel"))]
    let parts: Result<Vec<_>> = (0..plan.rows()).map(row_points).collect();

    let mut points = Vec::new();
    let mut weights = Vec::new();
    for (pts, ws) in parts? {
        points.extend(pts);
        weights.extend(ws);
    }
    let total: f64 = weights.iter().sum();
    debug_assert!(total > 0.0, "interpolated plan has no mass above the floor");
    for w in &mut weights {
        *w /= total;
    }
    Ok(WeightedCloud { points, weights, mass_scale: total })
}

/// Exact solvers for small instances, used as oracles by tests and the
/// acceptance suite. Independent of the Sinkhorn path: plans are obtained
/// by exhaustive enumeration of transportation-polytope vertices.
pub mod exact {
    use alloc::vec;
    use alloc::vec::Vec;

    use super::CostMatrix;

    /// Minimal `<P, C>` over the transportation polytope
    /// `{P >= 0 : P 1 = a, P^T 1 = b}`, by enumerating all spanning-tree
    /// bases of the bipartite support graph. Exponential in the instance
    /// size; intended for supports of at most a few nodes per side.
    pub fn lp_optimum(a: &[f64], b: &[f64], c: &CostMatrix) -> f64 {
        let m = a.len();
        let n = b.len();
        assert_eq!(c.rows(), m);
        assert_eq!(c.cols(), n);
        let cells = m * n;
        let basis_size = m + n - 1;
        let mut best = f64::INFINITY;
        let mut chosen = vec![0usize; basis_size];
        enumerate(cells, basis_size, 0, 0, &mut chosen, &mut |basis| {
            if let Some(plan) = solve_basis(a, b, n, basis) {
                let mut cost = 0.0;
                for (&cell, &w) in basis.iter().zip(&plan) {
                    cost += w * c.entries()[cell];
                }
                if cost < best {
                    best = cost;
                }
            }
        });
        best
    }

    fn enumerate(
        cells: usize,
        remaining: usize,
        start: usize,
        depth: usize,
        chosen: &mut [usize],
        visit: &mut impl FnMut(&[usize]),
    ) {
        if remaining == 0 {
            visit(&chosen[..depth]);
            return;
        }
        for cell in start..=cells - remaining {
            chosen[depth] = cell;
            enumerate(cells, remaining - 1, cell + 1, depth + 1, chosen, visit);
        }
    }

    /// Solves the marginal equations restricted to the basis cells by leaf
    /// elimination; `None` when the basis is not a spanning tree or the
    /// solution leaves the polytope.
    fn solve_basis(a: &[f64], b: &[f64], n: usize, basis: &[usize]) -> Option<Vec<f64>> {
        let m = a.len();
        let mut row_need: Vec<f64> = a.to_vec();
        let mut col_need: Vec<f64> = b.to_vec();
        let mut row_deg = vec![0usize; m];
        let mut col_deg = vec![0usize; n];
        for &cell in basis {
            row_deg[cell / n] += 1;
            col_deg[cell % n] += 1;
        }
        let mut weight = vec![f64::NAN; basis.len()];
        let mut alive: Vec<bool> = vec![true; basis.len()];
        for _ in 0..basis.len() {
            // find a live cell that is the only one in its row or column
            let position = basis.iter().enumerate().position(|(idx, &cell)| {
                alive[idx] && (row_deg[cell / n] == 1 || col_deg[cell % n] == 1)
            })?;
            let cell = basis[position];
            let (i, j) = (cell / n, cell % n);
            let w = if row_deg[i] == 1 { row_need[i] } else { col_need[j] };
            if w < -1e-9 {
                return None;
            }
            weight[position] = w.max(0.0);
            row_need[i] -= w;
            col_need[j] -= w;
            row_deg[i] -= 1;
            col_deg[j] -= 1;
            alive[position] = false;
        }
        // all marginals must be exhausted
        if row_need.iter().chain(col_need.iter()).any(|r| super::fabs(*r) > 1e-9) {
            return None;
        }
        Some(weight)
    }
}
