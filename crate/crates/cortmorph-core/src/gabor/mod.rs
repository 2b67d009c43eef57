//! Gabor filters: the continuous roto-dilation family and the discrete
//! wavelet pyramid, with analysis and synthesis between images and signed
//! coefficient fields.

mod continuous;
mod pyramid;

pub use continuous::{
    alpha_field, compute_c_psi, continuous_gabor, mother_even, mother_odd, psi0_hat,
    verify_zero_mass, verify_zero_mass_at, CPsiQuadrature, ZeroMassBox,
};
pub(crate) use continuous::{
    c_psi_integrand as c_psi_integrand_value, continuous_gabor_env, d_of_c as d_of_c_quadrature,
    psi0_hat_quadrature as psi0_hat_oracle,
};
pub use pyramid::{
    analyze, build_pyramid_grid, calibrate_frame_constant, least_squares_scale, synthesize,
    GridLevel, PyramidGrid, SignedLift,
};

use crate::error::{Error, Result};
use alloc::vec;
use alloc::vec::Vec;

/// Parameters of the Gabor mother pair and the pyramid layout.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaborParams {
    /// Envelope anisotropy of the discrete mother filters.
    pub gamma: f64,
    /// Carrier frequency of the discrete mother filters, cycles per unit.
    pub omega: f64,
    /// Scale base of the pyramid; levels are spaced by powers of `a0`.
    pub a0: f64,
    /// Translation step, in retinal units, before level scaling.
    pub b0: f64,
    /// Number of orientations; the pyramid uses `theta_l = l pi / d` for
    /// `l = 1..=d`.
    pub d: usize,
    /// Scale interval of the lifted domain.
    pub sigma_min: f64,
    pub sigma_max: f64,
    /// Image side in pixels.
    pub image_size: usize,
}

impl GaborParams {
    /// Filters are truncated where the envelope exponent reaches
    /// `R_CUT^2`, i.e. at a tail below `exp(-16) ~ 1.1e-7` of the peak.
    pub const R_CUT: f64 = 4.0;

    /// Defaults for a `size x size` run: `a0 = 2`, `b0 = 1`, `d = 8`,
    /// `sigma_min = 1.1244`, `sigma_max = sigma_min log2(size)`.
    ///
    /// `gamma = 2` and `omega = 0.47` are calibrated so the frame is close
    /// to tight: `omega = 1/2` puts the finest carrier exactly at the pixel
    /// Nyquist rate, where the odd filters of axis-aligned orientations
    /// sample to zero, and an isotropic envelope leaves the reconstruction
    /// short of low-frequency content.
    pub fn with_image_size(size: usize) -> Self {
        let sigma_min = 1.1244;
        Self {
            gamma: 2.0,
            omega: 0.47,
            a0: 2.0,
            b0: 1.0,
            d: 8,
            sigma_min,
            sigma_max: sigma_min * crate::math::log2(size as f64),
            image_size: size,
        }
    }

    /// Checks the structural invariants.
    pub fn validate(&self) -> Result<()> {
        fn positive(name: &str, v: f64) -> Result<()> {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(Error::Config(alloc::format!("{name} must be positive, got {v}")))
            }
        }
        positive("gamma", self.gamma)?;
        positive("omega", self.omega)?;
        positive("b0", self.b0)?;
        positive("sigma_min", self.sigma_min)?;
        if !(self.a0 > 1.0) {
            return Err(Error::Config(alloc::format!("a0 must exceed 1, got {}", self.a0)));
        }
        if self.d == 0 {
            return Err(Error::Config("d must be at least 1".into()));
        }
        if !(self.sigma_max > self.sigma_min) {
            return Err(Error::Config(alloc::format!(
                "sigma_max ({}) must exceed sigma_min ({})",
                self.sigma_max, self.sigma_min
            )));
        }
        if self.image_size == 0 {
            return Err(Error::Config("image_size must be positive".into()));
        }
        Ok(())
    }
}

/// A grayscale image with values nominally in `[0, 1]`.
///
/// Reconstructions may overshoot the range before clamping.
#[derive(Debug, Clone, PartialEq)]
pub struct Image {
    width: usize,
    height: usize,
    pixels: Vec<f64>,
}

impl Image {
    pub fn zeros(width: usize, height: usize) -> Self {
        Self { width, height, pixels: vec![0.0; width * height] }
    }

    /// Wraps a row-major pixel buffer (`y` major, `x` minor).
    pub fn from_pixels(width: usize, height: usize, pixels: Vec<f64>) -> Self {
        assert_eq!(pixels.len(), width * height);
        Self { width, height, pixels }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.pixels[y * self.width + x]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, v: f64) {
        self.pixels[y * self.width + x] = v;
    }

    pub fn pixels(&self) -> &[f64] {
        &self.pixels
    }

    pub fn pixels_mut(&mut self) -> &mut [f64] {
        &mut self.pixels
    }

    /// Sum of all pixel values (the image "mass").
    pub fn mass(&self) -> f64 {
        self.pixels.iter().sum()
    }

    /// Clamps every pixel into `[0, 1]`.
    pub fn clamped(mut self) -> Self {
        for v in &mut self.pixels {
            *v = v.clamp(0.0, 1.0);
        }
        self
    }

    pub(crate) fn expect_square(&self, op: &'static str, size: usize) -> Result<()> {
        if self.width != size || self.height != size {
            return Err(Error::Shape {
                op,
                expected_w: size,
                expected_h: size,
                got_w: self.width,
                got_h: self.height,
            });
        }
        Ok(())
    }
}
