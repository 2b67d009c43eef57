//! The discrete Gabor wavelet pyramid: index grid, analysis, synthesis,
//! and frame-constant calibration.
//!
//! Level `m` carries filters scaled by `a0^m`, centered on the spatial grid
//! `(n b0 a0^m, k b0 a0^m)` for `n, k = 0..=floor(D / (b0 a0^m))`, at the
//! orientations `theta_l = l pi / d`, `l = 1..=d`. Coefficients are plain
//! pixel sums against the sampled filters (unit pixel area), and synthesis
//! is the transposed sum scaled by the calibrated frame constant.

use crate::error::{Error, Result};
use crate::gabor::{GaborParams, Image};
use crate::geometry::CortexPoint;
use crate::math::{self, cos, exp, floor, log, sin, sqrt};
use alloc::vec;
use alloc::vec::Vec;

use core::f64::consts::PI;

/// One scale level of the pyramid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridLevel {
    /// Dilation factor `a0^m`.
    pub scale: f64,
    /// Spatial step `b0 a0^m` between neighboring centers.
    pub stride: f64,
    /// Number of positions per axis, `floor(D / stride) + 1`.
    pub positions: usize,
    /// Scale coordinate of the embedded grid points,
    /// `min(sigma_min a0^m, sigma_max)`.
    pub sigma: f64,
}

/// The discrete index set of the pyramid and its embedding into the lifted
/// domain.
#[derive(Debug, Clone, PartialEq)]
pub struct PyramidGrid {
    levels: Vec<GridLevel>,
    /// Raw orientation angles `theta_l = l pi / d` for `l = 1..=d`,
    /// in `(0, pi]`; slot `o` holds `l = o + 1`.
    orientations: Vec<f64>,
    image_size: usize,
    offsets: Vec<usize>,
    len: usize,
}

impl PyramidGrid {
    pub fn levels(&self) -> &[GridLevel] {
        &self.levels
    }

    pub fn orientations(&self) -> &[f64] {
        &self.orientations
    }

    pub fn image_size(&self) -> usize {
        self.image_size
    }

    /// Total number of coefficients per channel.
    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// Flat index of `(level, orientation slot, n, k)`.
    #[inline]
    pub fn index(&self, level: usize, orient: usize, n: usize, k: usize) -> usize {
        let p = self.levels[level].positions;
        self.offsets[level] + (orient * p + n) * p + k
    }

    /// Inverse of [`Self::index`].
    pub fn unravel(&self, mut idx: usize) -> (usize, usize, usize, usize) {
        let mut level = 0;
        while level + 1 < self.levels.len() && idx >= self.offsets[level + 1] {
            level += 1;
        }
        idx -= self.offsets[level];
        let p = self.levels[level].positions;
        let k = idx % p;
        idx /= p;
        let n = idx % p;
        let orient = idx / p;
        (level, orient, n, k)
    }

    /// Embedding of a grid index into the lifted domain. The raw angle
    /// `theta_l` is canonicalized into `[0, pi)` by the point constructor.
    pub fn embed(&self, level: usize, orient: usize, n: usize, k: usize) -> CortexPoint {
        let lv = &self.levels[level];
        CortexPoint::new(
            n as f64 * lv.stride,
            k as f64 * lv.stride,
            self.orientations[orient],
            lv.sigma,
        )
    }

    /// Canonical angle step between orientation slots.
    pub fn theta_step(&self) -> f64 {
        PI / self.orientations.len() as f64
    }

    /// Orientation slot whose canonical angle is `j * theta_step`.
    ///
    /// Slot `d - 1` carries `theta_d = pi`, which wraps to canonical angle 0.
    pub fn slot_for_canonical(&self, j: usize) -> usize {
        let d = self.orientations.len();
        (j + d - 1) % d
    }
}

/// Builds the pyramid grid for the given parameters.
///
/// The number of levels is `floor(log_a0(sigma_max / sigma_min)) + 1`.
pub fn build_pyramid_grid(p: &GaborParams) -> Result<PyramidGrid> {
    p.validate()?;
    let ratio = p.sigma_max / p.sigma_min;
    let m_levels = floor(log(ratio) / log(p.a0)) as usize + 1;

    let mut levels = Vec::with_capacity(m_levels);
    let mut offsets = Vec::with_capacity(m_levels);
    let mut len = 0;
    for m in 0..m_levels {
        let scale = math::pow(p.a0, m as f64);
        let stride = p.b0 * scale;
        let positions = floor(p.image_size as f64 / stride) as usize + 1;
        let sigma = (p.sigma_min * scale).min(p.sigma_max);
        offsets.push(len);
        len += p.d * positions * positions;
        levels.push(GridLevel { scale, stride, positions, sigma });
    }
    let orientations = (1..=p.d).map(|l| l as f64 * PI / p.d as f64).collect();
    Ok(PyramidGrid { levels, orientations, image_size: p.image_size, offsets, len })
}

/// Signed pyramid coefficients of an image, one slab per channel.
#[derive(Debug, Clone, PartialEq)]
pub struct SignedLift {
    pub even: Vec<f64>,
    pub odd: Vec<f64>,
}

impl SignedLift {
    pub fn zeros(grid: &PyramidGrid) -> Self {
        Self { even: vec![0.0; grid.len()], odd: vec![0.0; grid.len()] }
    }
}

/// Visits every pixel in the truncated support of the filter at
/// `(level, orientation slot, n, k)`, passing the even and odd filter
/// values. Truncation is at envelope exponent `R_CUT^2`.
fn for_each_filter_pixel(
    image_size: usize,
    level: &GridLevel,
    theta: f64,
    p: &GaborParams,
    n: usize,
    k: usize,
    mut visit: impl FnMut(usize, usize, f64, f64),
) {
    let scale = level.scale;
    let amp = 1.0 / scale;
    let cx = n as f64 * level.stride;
    let cy = k as f64 * level.stride;
    let radius = scale * GaborParams::R_CUT * f64::max(1.0, 1.0 / sqrt(p.gamma));
    let x0 = f64::max(0.0, math::ceil(cx - radius)) as usize;
    let y0 = f64::max(0.0, math::ceil(cy - radius)) as usize;
    let x1 = f64::min((image_size - 1) as f64, floor(cx + radius)) as usize;
    let y1 = f64::min((image_size - 1) as f64, floor(cy + radius)) as usize;
    if x0 > x1 || y0 > y1 {
        return;
    }
    let (st, ct) = (sin(theta), cos(theta));
    let cut = GaborParams::R_CUT * GaborParams::R_CUT;
    let carrier = 2.0 * PI * p.omega;
    for py in y0..=y1 {
        let v = (py as f64 - cy) / scale;
        for px in x0..=x1 {
            let u = (px as f64 - cx) / scale;
            let ur = ct * u + st * v;
            let vr = -st * u + ct * v;
            let arg = ur * ur + p.gamma * vr * vr;
            if arg > cut {
                continue;
            }
            let env = amp * exp(-arg);
            visit(px, py, env * cos(carrier * vr), env * sin(carrier * vr));
        }
    }
}

/// Analyzes an image into its signed pyramid coefficients
/// `even[i] = <I, psi_e^i>`, `odd[i] = <I, psi_o^i>`.
pub fn analyze(img: &Image, grid: &PyramidGrid, p: &GaborParams) -> Result<SignedLift> {
    img.expect_square("analyze", grid.image_size())?;
    let mut lift = SignedLift::zeros(grid);
    for (m, level) in grid.levels().iter().enumerate() {
        for (o, &theta) in grid.orientations().iter().enumerate() {
            for n in 0..level.positions {
                for k in 0..level.positions {
                    let mut even = 0.0;
                    let mut odd = 0.0;
                    for_each_filter_pixel(grid.image_size(), level, theta, p, n, k, |px, py, fe, fo| {
                        let v = img.get(px, py);
                        even += v * fe;
                        odd += v * fo;
                    });
                    let idx = grid.index(m, o, n, k);
                    lift.even[idx] = even;
                    lift.odd[idx] = odd;
                }
            }
        }
    }
    Ok(lift)
}

/// Synthesizes an image from signed pyramid coefficients:
/// `C (sum_i even[i] psi_e^i + sum_i odd[i] psi_o^i)` sampled on the pixel
/// grid.
pub fn synthesize(lift: &SignedLift, grid: &PyramidGrid, p: &GaborParams, c: f64) -> Image {
    let size = grid.image_size();
    let mut out = Image::zeros(size, size);
    for (m, level) in grid.levels().iter().enumerate() {
        for (o, &theta) in grid.orientations().iter().enumerate() {
            for n in 0..level.positions {
                for k in 0..level.positions {
                    let idx = grid.index(m, o, n, k);
                    let (we, wo) = (lift.even[idx], lift.odd[idx]);
                    if we == 0.0 && wo == 0.0 {
                        continue;
                    }
                    for_each_filter_pixel(size, level, theta, p, n, k, |px, py, fe, fo| {
                        let v = out.get(px, py) + we * fe + wo * fo;
                        out.set(px, py, v);
                    });
                }
            }
        }
    }
    for v in out.pixels_mut() {
        *v *= c;
    }
    out
}

/// Least-squares scale `c` minimizing `sum_j |target_j - c recon_j|^2`.
pub fn least_squares_scale(pairs: &[(&Image, &Image)]) -> Result<f64> {
    let mut num = 0.0;
    let mut den = 0.0;
    for (target, recon) in pairs {
        num += math::dot(target.pixels(), recon.pixels());
        den += math::norm_sq(recon.pixels());
    }
    if den <= 0.0 || !den.is_finite() {
        return Err(Error::Calibration("reconstructions carry no energy"));
    }
    Ok(num / den)
}

/// Calibrates the frame constant: the least-squares `C` for
/// `I ~ C synthesize(analyze(I), 1)` over the calibration set.
pub fn calibrate_frame_constant(
    grid: &PyramidGrid,
    p: &GaborParams,
    images: &[&Image],
) -> Result<f64> {
    if images.iter().all(|img| img.pixels().iter().all(|&v| v == 0.0)) {
        return Err(Error::Calibration("calibration set is empty or all-zero"));
    }
    let mut recons = Vec::with_capacity(images.len());
    for img in images {
        let lift = analyze(img, grid, p)?;
        recons.push(synthesize(&lift, grid, p, 1.0));
    }
    let pairs: Vec<(&Image, &Image)> =
        images.iter().copied().zip(recons.iter()).collect();
    least_squares_scale(&pairs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::math::{fabs, rel_l2};
    use crate::shapes;
    use approx::assert_relative_eq;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn params32() -> GaborParams {
        GaborParams::with_image_size(32)
    }

    #[test]
    fn level_count_follows_scale_interval() {
        // sigma_max = sigma_min log2(64) = 6 sigma_min -> floor(log2 6) + 1 = 3
        let p = GaborParams::with_image_size(64);
        let grid = build_pyramid_grid(&p).unwrap();
        assert_eq!(grid.levels().len(), 3);
        assert_relative_eq!(grid.levels()[1].sigma, p.sigma_min * 2.0);
    }

    #[test]
    fn unit_image_grid_has_two_positions() {
        let mut p = GaborParams::with_image_size(1);
        p.sigma_max = p.sigma_min * 1.5;
        let grid = build_pyramid_grid(&p).unwrap();
        assert_eq!(grid.levels().len(), 1);
        assert_eq!(grid.levels()[0].positions, 2);
    }

    #[test]
    fn orientations_lie_in_half_open_period() {
        let grid = build_pyramid_grid(&params32()).unwrap();
        for &theta in grid.orientations() {
            assert!(theta > 0.0 && theta <= PI);
        }
        // embedded points are canonical
        let pt = grid.embed(0, grid.orientations().len() - 1, 0, 0);
        assert_relative_eq!(pt.theta, 0.0);
    }

    #[test]
    fn invalid_scale_interval_is_config_error() {
        let mut p = params32();
        p.sigma_max = p.sigma_min / 2.0;
        assert!(matches!(build_pyramid_grid(&p), Err(Error::Config(_))));
    }

    #[test]
    fn index_unravel_roundtrip() {
        let grid = build_pyramid_grid(&params32()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..200 {
            let idx = rng.gen_range(0..grid.len());
            let (m, o, n, k) = grid.unravel(idx);
            assert_eq!(grid.index(m, o, n, k), idx);
        }
    }

    #[test]
    fn analyze_zero_image_gives_zero_lift() {
        let p = params32();
        let grid = build_pyramid_grid(&p).unwrap();
        let lift = analyze(&Image::zeros(32, 32), &grid, &p).unwrap();
        assert!(lift.even.iter().all(|&v| v == 0.0));
        assert!(lift.odd.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn analyze_rejects_wrong_shape() {
        let p = params32();
        let grid = build_pyramid_grid(&p).unwrap();
        assert!(matches!(
            analyze(&Image::zeros(16, 32), &grid, &p),
            Err(Error::Shape { .. })
        ));
    }

    #[test]
    fn constant_image_has_no_interior_odd_response() {
        let p = params32();
        let grid = build_pyramid_grid(&p).unwrap();
        let c = 0.8;
        let img = Image::from_pixels(32, 32, vec![c; 32 * 32]);
        let lift = analyze(&img, &grid, &p).unwrap();
        for (m, level) in grid.levels().iter().enumerate() {
            let radius = level.scale * GaborParams::R_CUT;
            for (o, _) in grid.orientations().iter().enumerate() {
                for n in 0..level.positions {
                    for k in 0..level.positions {
                        let cx = n as f64 * level.stride;
                        let cy = k as f64 * level.stride;
                        let interior = cx - radius >= 0.0
                            && cy - radius >= 0.0
                            && cx + radius <= 31.0
                            && cy + radius <= 31.0;
                        if interior {
                            let v = lift.odd[grid.index(m, o, n, k)];
                            assert!(fabs(v) <= 1e-8 * c, "odd response {v} at interior node");
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn analyze_is_linear() {
        let p = params32();
        let grid = build_pyramid_grid(&p).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let mut a = Image::zeros(32, 32);
        let mut b = Image::zeros(32, 32);
        for v in a.pixels_mut() {
            *v = rng.gen_range(0.0..1.0);
        }
        for v in b.pixels_mut() {
            *v = rng.gen_range(0.0..1.0);
        }
        let mut sum = a.clone();
        for (v, w) in sum.pixels_mut().iter_mut().zip(b.pixels()) {
            *v += w;
        }
        let la = analyze(&a, &grid, &p).unwrap();
        let lb = analyze(&b, &grid, &p).unwrap();
        let ls = analyze(&sum, &grid, &p).unwrap();
        for i in 0..grid.len() {
            assert_relative_eq!(ls.even[i], la.even[i] + lb.even[i], epsilon = 1e-12);
            assert_relative_eq!(ls.odd[i], la.odd[i] + lb.odd[i], epsilon = 1e-12);
        }
    }

    #[test]
    fn synthesize_zero_lift_and_linearity() {
        let p = params32();
        let grid = build_pyramid_grid(&p).unwrap();
        let zero = synthesize(&SignedLift::zeros(&grid), &grid, &p, 1.0);
        assert!(zero.pixels().iter().all(|&v| v == 0.0));

        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let mut lift = SignedLift::zeros(&grid);
        for v in lift.even.iter_mut().chain(lift.odd.iter_mut()) {
            *v = rng.gen_range(-1.0..1.0);
        }
        let one = synthesize(&lift, &grid, &p, 1.0);
        let mut scaled = lift.clone();
        for v in scaled.even.iter_mut().chain(scaled.odd.iter_mut()) {
            *v *= 2.5;
        }
        let two = synthesize(&scaled, &grid, &p, 1.0);
        for (a, b) in one.pixels().iter().zip(two.pixels()) {
            assert_relative_eq!(2.5 * a, *b, epsilon = 1e-12, max_relative = 1e-12);
        }
    }

    #[test]
    fn letter_roundtrip_error_is_within_budget() {
        let p = params32();
        let grid = build_pyramid_grid(&p).unwrap();
        let t = shapes::letter_t(32);
        let e = shapes::letter_e(32);
        let c = calibrate_frame_constant(&grid, &p, &[&t, &e]).unwrap();
        for img in [&t, &e] {
            let lift = analyze(img, &grid, &p).unwrap();
            let recon = synthesize(&lift, &grid, &p, c);
            let err = rel_l2(recon.pixels(), img.pixels());
            assert!(err <= 0.10, "round-trip error {err}");
        }
    }

    #[test]
    fn calibration_identity_stub_gives_unit_constant() {
        // a tight frame would reproduce the image exactly; the closed-form
        // ratio must then return exactly 1
        let t = shapes::letter_t(32);
        let c = least_squares_scale(&[(&t, &t)]).unwrap();
        assert_relative_eq!(c, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn calibration_is_scale_invariant() {
        let p = params32();
        let grid = build_pyramid_grid(&p).unwrap();
        let t = shapes::letter_t(32);
        let mut scaled = t.clone();
        for v in scaled.pixels_mut() {
            *v *= 0.37;
        }
        let c1 = calibrate_frame_constant(&grid, &p, &[&t]).unwrap();
        let c2 = calibrate_frame_constant(&grid, &p, &[&scaled]).unwrap();
        assert_relative_eq!(c1, c2, max_relative = 1e-12);
    }

    #[test]
    fn calibration_constants_of_t_and_e_are_close() {
        let p = params32();
        let grid = build_pyramid_grid(&p).unwrap();
        let t = shapes::letter_t(32);
        let e = shapes::letter_e(32);
        let ct = calibrate_frame_constant(&grid, &p, &[&t]).unwrap();
        let ce = calibrate_frame_constant(&grid, &p, &[&e]).unwrap();
        assert!(fabs(ct - ce) / ct < 0.20, "ct={ct} ce={ce}");
    }

    #[test]
    fn all_zero_calibration_set_is_an_error() {
        let p = params32();
        let grid = build_pyramid_grid(&p).unwrap();
        let z = Image::zeros(32, 32);
        assert!(matches!(
            calibrate_frame_constant(&grid, &p, &[&z]),
            Err(Error::Calibration(_))
        ));
    }
}
