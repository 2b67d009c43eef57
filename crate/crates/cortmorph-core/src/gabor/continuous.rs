//! The continuous Gabor family over position, orientation and scale, and
//! numerical evaluations of its analytic identities: the logarithmic
//! gradient field, the closed-form Fourier transform of the mother filter,
//! the frame constant, and the zero-total-mass property.

use crate::error::{Error, Result};
use crate::gabor::GaborParams;
use crate::geometry::CortexPoint;
use crate::math::{self, cos, exp, fabs, sin, tan};
use num_complex::Complex64;

use core::f64::consts::PI;

/// Below this magnitude of `tan(2 y_k)` the alpha field is treated as
/// singular; callers must resample.
pub(crate) const ALPHA_SINGULAR_TOL: f64 = 1e-8;

/// Even discrete mother: `exp(-x^2 - gamma y^2) cos(2 pi omega y)`.
pub fn mother_even(x: f64, y: f64, p: &GaborParams) -> f64 {
    exp(-x * x - p.gamma * y * y) * cos(2.0 * PI * p.omega * y)
}

/// Odd discrete mother: `exp(-x^2 - gamma y^2) sin(2 pi omega y)`.
pub fn mother_odd(x: f64, y: f64, p: &GaborParams) -> f64 {
    exp(-x * x - p.gamma * y * y) * sin(2.0 * PI * p.omega * y)
}

/// Filter-frame coordinates `(x_k, y_k) = sigma^-1 R_{-theta} (x - kx, y - ky)`.
#[inline]
fn frame_coords(k: &CortexPoint, x: f64, y: f64) -> (f64, f64) {
    let dx = x - k.x;
    let dy = y - k.y;
    let (st, ct) = (sin(k.theta), cos(k.theta));
    ((ct * dx + st * dy) / k.sigma, (-st * dx + ct * dy) / k.sigma)
}

/// Continuous family member at `k = (x, y, theta, sigma)`:
///
/// `psi^k(x, y) = sigma^{-3/2} exp(-(x_k^2 + y_k^2)) sin(2 y_k)`.
pub fn continuous_gabor(k: &CortexPoint, x: f64, y: f64) -> Result<f64> {
    Ok(continuous_gabor_env(k, x, y, 1.0)?)
}

/// Same family with a configurable envelope anisotropy in the `y_k`
/// direction. The model value is `env_gamma = 1`; the verification suite
/// perturbs it to confirm the gradient-field check rejects a wrong model.
pub(crate) fn continuous_gabor_env(
    k: &CortexPoint,
    x: f64,
    y: f64,
    env_gamma: f64,
) -> Result<f64> {
    if !(k.sigma > 0.0) {
        return Err(Error::NonpositiveSigma(k.sigma));
    }
    let (xk, yk) = frame_coords(k, x, y);
    Ok(math::pow(k.sigma, -1.5) * exp(-(xk * xk + env_gamma * yk * yk)) * sin(2.0 * yk))
}

/// Logarithmic gradient of the family in the flat `(x, y, theta, sigma)`
/// chart: the vector `alpha(k)` with `grad_k psi^k = psi^k alpha(k)`.
///
/// Undefined on the set `tan(2 y_k) = 0`.
pub fn alpha_field(k: &CortexPoint, x: f64, y: f64) -> Result<[f64; 4]> {
    if !(k.sigma > 0.0) {
        return Err(Error::NonpositiveSigma(k.sigma));
    }
    let dx = x - k.x;
    let dy = y - k.y;
    let (st, ct) = (sin(k.theta), cos(k.theta));
    let s = k.sigma;
    let (xk, yk) = frame_coords(k, x, y);
    let t = tan(2.0 * yk);
    if fabs(t) < ALPHA_SINGULAR_TOL {
        return Err(Error::AlphaSingular(fabs(t)));
    }
    let ax = 2.0 * (dx / (s * s) + st / (s * t));
    let ay = 2.0 * (dy / (s * s) - ct / (s * t));
    // The carrier term is the only theta-dependent factor surviving the
    // rotation-invariant envelope; differentiating y_k in theta gives -x_k.
    let ath = -2.0 * xk / t;
    let asig = 2.0 * ((dx * dx + dy * dy) / (s * s * s) + (st * dx - ct * dy) / (s * s * t)
        - 0.75 / s);
    Ok([ax, ay, ath, asig])
}

/// Closed form of the Fourier transform of the mother filter
/// `psi_0 = exp(-(x^2 + y^2)) sin(2 y)` under the convention
/// `F[f](xi) = int f(v) exp(-2 pi i v . xi) dv`:
///
/// ```text
/// psi0_hat(xi) = (pi / 2i) exp(-pi^2 xi1^2)
///                (exp(-(1 - pi xi2)^2) - exp(-(1 + pi xi2)^2))
/// ```
///
/// Completing the square in the carrier splits the transform into two
/// Gaussians shifted by the carrier frequency; the remaining contour
/// integrals `D(c) = int exp(-(x + i c)^2) dx` are constant in `c` and equal
/// `sqrt(pi)` (checked numerically by the verification suite), which the
/// prefactor `pi = D(c)^2` already incorporates. The transform is odd and
/// purely imaginary in `xi2`, vanishes on the `xi1` axis, and grows like
/// `2 pi^2 |xi2| / e` near the origin.
pub fn psi0_hat(xi1: f64, xi2: f64) -> Complex64 {
    let g1 = exp(-PI * PI * xi1 * xi1);
    let a = 1.0 - PI * xi2;
    let b = 1.0 + PI * xi2;
    let diff = exp(-a * a) - exp(-b * b);
    // 1/(2i) = -i/2
    Complex64::new(0.0, -0.5 * PI * g1 * diff)
}

/// Quadrature layout for the frame constant
/// `C_psi = int |psi0_hat(xi)|^2 / |xi|^2 dxi`.
///
/// A midpoint product rule on `[-xi1_half, xi1_half] x [-xi2_half, xi2_half]`;
/// the integrand's only nonsmooth point, the removable `0/0` at the origin,
/// never falls on a midpoint node.
#[derive(Debug, Clone, Copy)]
pub struct CPsiQuadrature {
    pub xi1_half: f64,
    pub xi2_half: f64,
    pub n1: usize,
    pub n2: usize,
}

impl Default for CPsiQuadrature {
    fn default() -> Self {
        // exp(-2 pi^2 xi1^2) is below 1e-19 past |xi1| = 1.5; the shifted
        // Gaussians in xi2 are below 1e-24 past |xi2| = 2.
        Self { xi1_half: 1.5, xi2_half: 2.0, n1: 300, n2: 400 }
    }
}

/// Integrand of the frame constant.
pub(crate) fn c_psi_integrand(xi1: f64, xi2: f64) -> f64 {
    let r2 = xi1 * xi1 + xi2 * xi2;
    if r2 == 0.0 {
        return 0.0;
    }
    psi0_hat(xi1, xi2).norm_sqr() / r2
}

fn c_psi_midpoint(q: &CPsiQuadrature) -> f64 {
    let hx = 2.0 * q.xi1_half / q.n1 as f64;
    let hy = 2.0 * q.xi2_half / q.n2 as f64;
    let mut sum = 0.0;
    for i in 0..q.n1 {
        let xi1 = -q.xi1_half + (i as f64 + 0.5) * hx;
        let mut row = 0.0;
        for j in 0..q.n2 {
            let xi2 = -q.xi2_half + (j as f64 + 0.5) * hy;
            row += c_psi_integrand(xi1, xi2);
        }
        sum += row;
    }
    sum * hx * hy
}

/// Frame constant `C_psi` by refined midpoint quadrature.
///
/// Refines until two successive grids agree to 0.1%, starting from the
/// given layout; errors out if three refinements do not converge.
pub fn compute_c_psi(q: &CPsiQuadrature) -> Result<f64> {
    let mut grid = *q;
    let mut prev = c_psi_midpoint(&grid);
    for _ in 0..3 {
        grid = CPsiQuadrature { n1: grid.n1 * 2, n2: grid.n2 * 2, ..grid };
        let next = c_psi_midpoint(&grid);
        let rel = fabs(next - prev) / fabs(next);
        if rel < 1e-3 {
            return Ok(next);
        }
        prev = next;
    }
    Err(Error::Accuracy { op: "compute_c_psi", rel_change: f64::NAN })
}

/// Truncation box for the zero-total-mass integral
/// `int_M psi^k(x, y) dk` over
/// `(kx, ky) in [-r, r]^2, theta in [0, 2 pi), sigma in [sigma_lo, sigma_hi]`.
#[derive(Debug, Clone, Copy)]
pub struct ZeroMassBox {
    pub r: f64,
    pub sigma_lo: f64,
    pub sigma_hi: f64,
    pub n_xy: usize,
    pub n_theta: usize,
    pub n_sigma: usize,
}

impl Default for ZeroMassBox {
    fn default() -> Self {
        Self { r: 20.0, sigma_lo: 0.05, sigma_hi: 20.0, n_xy: 60, n_theta: 64, n_sigma: 48 }
    }
}

/// Truncated integral of the whole family at the origin of the retinal
/// plane. The full-period orientation integral annihilates the odd carrier
/// for every position and scale, so the value is zero up to rounding.
pub fn verify_zero_mass(b: &ZeroMassBox) -> f64 {
    verify_zero_mass_at(b, 0.0, 0.0)
}

/// Truncated integral of the whole family evaluated at `(x, y)`; the value
/// is independent of the evaluation point.
pub fn verify_zero_mass_at(b: &ZeroMassBox, x: f64, y: f64) -> f64 {
    let hxy = 2.0 * b.r / b.n_xy as f64;
    let hth = 2.0 * PI / b.n_theta as f64;
    let hs = (b.sigma_hi - b.sigma_lo) / b.n_sigma as f64;
    let mut total = 0.0;
    for i in 0..b.n_xy {
        let kx = -b.r + (i as f64 + 0.5) * hxy;
        for j in 0..b.n_xy {
            let ky = -b.r + (j as f64 + 0.5) * hxy;
            let dx = x - kx;
            let dy = y - ky;
            let r2 = dx * dx + dy * dy;
            for si in 0..b.n_sigma {
                let sigma = b.sigma_lo + (si as f64 + 0.5) * hs;
                let env = math::pow(sigma, -1.5) * exp(-r2 / (sigma * sigma));
                if env < 1e-300 {
                    continue;
                }
                let mut ang = 0.0;
                for ti in 0..b.n_theta {
                    let theta = (ti as f64 + 0.5) * hth;
                    let (st, ct) = (sin(theta), cos(theta));
                    let yk = (-st * dx + ct * dy) / sigma;
                    ang += sin(2.0 * yk);
                }
                total += env * ang;
            }
        }
    }
    total * hxy * hxy * hth * hs
}

/// `D(c) = int exp(-(x + i c)^2) dx` by direct quadrature; used by the
/// verification suite to confirm the contour-shift value `sqrt(pi)`.
pub(crate) fn d_of_c(c: f64) -> Complex64 {
    // exp(-(x + ic)^2) = exp(c^2 - x^2) (cos(2cx) - i sin(2cx))
    let half = 8.0;
    let n = 4000;
    let h = 2.0 * half / n as f64;
    let mut re = 0.0;
    let mut im = 0.0;
    for i in 0..n {
        let x = -half + (i as f64 + 0.5) * h;
        let w = exp(c * c - x * x);
        re += w * cos(2.0 * c * x);
        im -= w * sin(2.0 * c * x);
    }
    Complex64::new(re * h, im * h)
}

/// Direct 2-D quadrature of the mother transform; the oracle for
/// [`psi0_hat`].
pub(crate) fn psi0_hat_quadrature(xi1: f64, xi2: f64) -> Complex64 {
    let half = 6.5;
    let n = 520;
    let h = 2.0 * half / n as f64;
    let mut acc = Complex64::new(0.0, 0.0);
    for i in 0..n {
        let x = -half + (i as f64 + 0.5) * h;
        let gx = exp(-x * x);
        for j in 0..n {
            let y = -half + (j as f64 + 0.5) * h;
            let f = gx * exp(-y * y) * sin(2.0 * y);
            let phase = -2.0 * PI * (x * xi1 + y * xi2);
            acc += Complex64::new(f * cos(phase), f * sin(phase));
        }
    }
    acc * (h * h)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::math::sqrt;
    use approx::assert_relative_eq;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn params() -> GaborParams {
        GaborParams { gamma: 1.0, omega: 0.5, ..GaborParams::with_image_size(32) }
    }

    #[test]
    fn mother_even_examples() {
        let p = params();
        assert_eq!(mother_even(0.0, 0.0, &p), 1.0);
        for x in [0.3, -1.1, 2.0] {
            assert_relative_eq!(mother_even(x, 0.0, &p), exp(-x * x));
        }
        // (1, 1) with gamma = 1, omega = 0.5 -> exp(-2) cos(pi) = -exp(-2)
        assert_relative_eq!(mother_even(1.0, 1.0, &p), -exp(-2.0), epsilon = 1e-15);
    }

    #[test]
    fn mother_odd_examples() {
        let p = params();
        for x in [0.0, 0.7, -2.3] {
            assert_eq!(mother_odd(x, 0.0, &p), 0.0);
        }
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..50 {
            let (x, y) = (rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0));
            assert_relative_eq!(mother_odd(x, y, &p), -mother_odd(x, -y, &p), epsilon = 1e-15);
        }
        // odd integrand integrates to zero
        let n = 400;
        let h = 12.0 / n as f64;
        let mut total = 0.0;
        for i in 0..n {
            let x = -6.0 + (i as f64 + 0.5) * h;
            for j in 0..n {
                let y = -6.0 + (j as f64 + 0.5) * h;
                total += mother_odd(x, y, &p);
            }
        }
        assert!(fabs(total * h * h) <= 1e-8);
    }

    #[test]
    fn continuous_gabor_identity_and_rotation() {
        let base = CortexPoint::new(0.0, 0.0, 0.0, 1.0);
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..100 {
            let (x, y) = (rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0));
            let psi0 = exp(-(x * x + y * y)) * sin(2.0 * y);
            assert_relative_eq!(continuous_gabor(&base, x, y).unwrap(), psi0, epsilon = 1e-15);
            // half-turn flips the odd mother
            let turned = CortexPoint { theta: PI, ..base };
            assert_relative_eq!(
                continuous_gabor(&turned, x, y).unwrap(),
                -psi0,
                epsilon = 1e-15,
                max_relative = 1e-12
            );
            // rotation covariance: psi at (0,0,theta,1) equals psi0 after R_{-theta}
            let theta = rng.gen_range(0.0..PI);
            let k = CortexPoint::new(0.0, 0.0, theta, 1.0);
            let (ct, st) = (cos(theta), sin(theta));
            let (rx, ry) = (ct * x + st * y, -st * x + ct * y);
            let expect = exp(-(rx * rx + ry * ry)) * sin(2.0 * ry);
            assert_relative_eq!(
                continuous_gabor(&k, x, y).unwrap(),
                expect,
                epsilon = 1e-14,
                max_relative = 1e-12
            );
        }
    }

    #[test]
    fn continuous_gabor_scale_example() {
        // k = (0,0,0,2) at (0, pi/4): 2^{-3/2} exp(-pi^2/64) sin(pi/4)
        let k = CortexPoint::new(0.0, 0.0, 0.0, 2.0);
        let got = continuous_gabor(&k, 0.0, PI / 4.0).unwrap();
        let expect = math::pow(2.0, -1.5) * exp(-PI * PI / 64.0) * sin(PI / 4.0);
        assert_relative_eq!(got, expect, epsilon = 1e-15);
    }

    #[test]
    fn continuous_gabor_rejects_nonpositive_sigma() {
        let k = CortexPoint { x: 0.0, y: 0.0, theta: 0.0, sigma: -1.0 };
        assert!(matches!(continuous_gabor(&k, 0.0, 0.0), Err(Error::NonpositiveSigma(_))));
    }

    #[test]
    fn alpha_matches_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut checked = 0;
        while checked < 100 {
            let k = CortexPoint::new(
                rng.gen_range(-1.0..1.0),
                rng.gen_range(-1.0..1.0),
                rng.gen_range(0.0..PI),
                rng.gen_range(0.5..3.0),
            );
            let (x, y) = (rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0));
            let (xk, yk) = frame_coords(&k, x, y);
            // keep away from the singular set and from zeros of the filter
            if fabs(sin(2.0 * yk)) < 0.2 || fabs(cos(2.0 * yk)) < 0.2 {
                continue;
            }
            if xk * xk + yk * yk > 4.0 {
                continue;
            }
            let alpha = alpha_field(&k, x, y).unwrap();
            let psi = continuous_gabor(&k, x, y).unwrap();
            let coords = [k.x, k.y, k.theta, k.sigma];
            for i in 0..4 {
                let h = 1e-5 * if i == 3 { k.sigma } else { 1.0 };
                let mut up = coords;
                up[i] += h;
                let mut dn = coords;
                dn[i] -= h;
                let kp = CortexPoint { x: up[0], y: up[1], theta: up[2], sigma: up[3] };
                let km = CortexPoint { x: dn[0], y: dn[1], theta: dn[2], sigma: dn[3] };
                // evaluate in the flat chart: no theta re-wrapping
                let fd = (continuous_gabor_env(&kp, x, y, 1.0).unwrap()
                    - continuous_gabor_env(&km, x, y, 1.0).unwrap())
                    / (2.0 * h * psi);
                assert_relative_eq!(fd, alpha[i], max_relative = 1e-4, epsilon = 1e-7);
            }
            checked += 1;
        }
    }

    #[test]
    fn alpha_singular_on_axis() {
        // at (x, y) = (kx, ky) the frame coordinates vanish, tan(2 y_k) = 0
        let k = CortexPoint::new(1.0, -2.0, 0.7, 1.3);
        assert!(matches!(alpha_field(&k, 1.0, -2.0), Err(Error::AlphaSingular(_))));
    }

    #[test]
    fn alpha_x_reduces_at_zero_theta() {
        // theta = 0 kills the sin(theta) carrier term of alpha^x
        let k = CortexPoint::new(0.0, 0.0, 0.0, 1.0);
        let y = PI / 8.0; // y_k = pi/8, tan(2 y_k) = 1
        for x in [0.4, -0.9, 1.7] {
            let a = alpha_field(&k, x, y).unwrap();
            assert_relative_eq!(a[0], 2.0 * x, epsilon = 1e-12);
        }
    }

    #[test]
    fn psi0_hat_vanishes_at_origin_and_matches_quadrature() {
        assert_eq!(psi0_hat(0.0, 0.0).norm(), 0.0);
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..20 {
            let xi1 = rng.gen_range(-0.8..0.8);
            // keep |psi0_hat| away from its zero set xi2 = 0
            let mag = rng.gen_range(0.05..0.7);
            let xi2 = if rng.gen_bool(0.5) { mag } else { -mag };
            let closed = psi0_hat(xi1, xi2);
            let quad = psi0_hat_quadrature(xi1, xi2);
            assert!(
                (closed - quad).norm() <= 1e-6 * quad.norm(),
                "xi=({xi1},{xi2}): closed={closed} quad={quad}"
            );
        }
    }

    #[test]
    fn psi0_hat_small_frequency_growth_is_linear() {
        // |psi0_hat(0, xi2)| ~ (2 pi^2 / e) |xi2| near the origin
        let slope = 2.0 * PI * PI / exp(1.0);
        for xi2 in [1e-3, 1e-4, 1e-5] {
            let v = psi0_hat(0.0, xi2).norm() / xi2;
            assert_relative_eq!(v, slope, max_relative = 1e-4);
        }
    }

    #[test]
    fn d_of_c_is_sqrt_pi() {
        for c in [0.0, 0.5, 1.3, 2.0, PI] {
            let d = d_of_c(c);
            assert_relative_eq!(d.re, sqrt(PI), max_relative = 1e-10);
            // the odd part cancels pairs of exp(c^2)-sized terms
            assert!(fabs(d.im) < 1e-9);
        }
    }

    #[test]
    fn c_psi_converges_and_has_decayed_tail() {
        let base = compute_c_psi(&CPsiQuadrature::default()).unwrap();
        assert!(base.is_finite() && base > 0.0);
        // doubling the integration box moves the value by < 0.01%
        let wide = compute_c_psi(&CPsiQuadrature {
            xi1_half: 3.0,
            xi2_half: 4.0,
            n1: 600,
            n2: 800,
        })
        .unwrap();
        assert!(fabs(wide - base) / base < 1e-4, "base={base} wide={wide}");
        // integrand is bounded near the origin by the linear development
        let near = c_psi_integrand(1e-9, 1e-9);
        let bound = 2.0 * (2.0 * PI * PI / exp(1.0)) * (2.0 * PI * PI / exp(1.0));
        assert!(near <= bound);
    }

    #[test]
    fn zero_mass_examples() {
        let b = ZeroMassBox::default();
        let at_origin = verify_zero_mass(&b);
        assert!(fabs(at_origin) <= 1e-6, "got {at_origin}");
        let shifted = verify_zero_mass_at(&b, 3.0, -2.0);
        assert!(fabs(shifted - at_origin) <= 1e-8);
    }

    #[test]
    fn zero_mass_inner_angular_integral_vanishes() {
        // s exp(-s^2) sin(-2 s sin(a)) integrates to ~0 over a full period
        for s in [0.3, 1.0, 2.5] {
            let n = 256;
            let h = 2.0 * PI / n as f64;
            let mut total = 0.0;
            for i in 0..n {
                let a = (i as f64 + 0.5) * h;
                total += s * exp(-s * s) * sin(-2.0 * s * sin(a));
            }
            assert!(fabs(total * h) <= 1e-10);
        }
    }
}
