//! Geometry of the lifted domain: the constant-coefficient flow distance
//! `d_c` and its geodesic interpolant.
//!
//! Points live on `M_c = [0,D]^2 x S^1 x [sigma_min, sigma_max]` with
//! orientation period `pi` (the even filter is invariant and the odd filter
//! only flips sign under a half-turn, so features are orientations, not
//! directions). Distances come from flows of a constant-coefficient vector
//! field in the anisotropic orthonormal frame
//!
//! ```text
//! Y1 = cos(theta) dx + sin(theta) dy      Y3 = (sigma/h1)(-sin(theta) dx + cos(theta) dy)
//! Y2 = dtheta                             Y4 = (sigma/h2) dsigma
//! ```
//!
//! Fitting coefficients `(c1, c2, c3, c4)` so the time-one flow carries `p0`
//! to `p1` gives `d_c^2 = c1^2 + c2^2 + c3^2 + c4^2`. The position block of
//! the flow integrates in closed form through complex exponential integrals;
//! the removable singularities at `c2 -> 0` and `c4 -> 0` (pure translation)
//! are absorbed by [`math::exp_integral`].

use crate::error::{Error, Result};
use crate::math::{self, exp_integral, sqrt, wrap_canonical, wrap_signed};
use num_complex::Complex64;

/// Orientation period of the lifted domain.
pub const THETA_PERIOD: f64 = core::f64::consts::PI;

/// A point `(x, y, theta, sigma)` of the lifted domain.
///
/// `theta` is stored as its canonical representative in `[0, pi)`;
/// `sigma` must be positive.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CortexPoint {
    pub x: f64,
    pub y: f64,
    pub theta: f64,
    pub sigma: f64,
}

impl CortexPoint {
    /// Builds a point, wrapping `theta` into `[0, pi)`.
    pub fn new(x: f64, y: f64, theta: f64, sigma: f64) -> Self {
        debug_assert!(sigma > 0.0, "CortexPoint requires sigma > 0");
        Self {
            x,
            y,
            theta: wrap_canonical(theta, THETA_PERIOD),
            sigma,
        }
    }

    fn as_array(&self) -> [f64; 4] {
        [self.x, self.y, self.theta, self.sigma]
    }
}

/// Anisotropy parameters `h1, h2` of the metric.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetricParams {
    pub h1: f64,
    pub h2: f64,
}

impl MetricParams {
    pub fn new(h1: f64, h2: f64) -> Self {
        debug_assert!(h1 > 0.0 && h2 > 0.0);
        Self { h1, h2 }
    }
}

/// Coefficients of the constant flow connecting two points.
///
/// Reversing the endpoints negates all four coefficients.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FlowCoefficients {
    pub c1: f64,
    pub c2: f64,
    pub c3: f64,
    pub c4: f64,
}

impl FlowCoefficients {
    /// Squared flow distance `c1^2 + c2^2 + c3^2 + c4^2`.
    pub fn norm_sq(&self) -> f64 {
        self.c1 * self.c1 + self.c2 * self.c2 + self.c3 * self.c3 + self.c4 * self.c4
    }
}

/// Signed angular difference `delta` in `(-pi/2, pi/2]` with
/// `theta1 = theta0 + delta (mod pi)`.
///
/// Ties at exactly `pi/2` resolve to `+pi/2` so cost matrices are
/// deterministic.
pub fn angular_delta(theta0: f64, theta1: f64) -> f64 {
    wrap_signed(theta1 - theta0, THETA_PERIOD)
}

/// A solved geodesic between two points.
///
/// Amortizes the flow solve when several intermediate points of the same
/// pair are needed.
#[derive(Debug, Clone, Copy)]
pub struct Geodesic {
    origin: CortexPoint,
    coeff: FlowCoefficients,
    /// c4 / h2 — the log-scale rate.
    tilde_c4: f64,
    /// sigma0 / h1 — the spatial block prefactor.
    radial: f64,
    /// Sign of the moving spatial frame along this path.
    ///
    /// With orientation period pi the frame `(Y1, Y3)` at `theta` and at
    /// `theta + pi` differ by a global sign, so `(c1, c3)` are only defined
    /// once a representative is fixed. Anchoring the sign to whether the
    /// path's midpoint orientation `theta0 + c2/2` lies in `[0, pi)` makes
    /// the choice independent of traversal direction, which gives exact
    /// componentwise antisymmetry under endpoint reversal.
    frame_sign: f64,
}

impl Geodesic {
    /// Fits the constant-coefficient flow carrying `p0` to `p1`.
    pub fn between(p0: &CortexPoint, p1: &CortexPoint, m: &MetricParams) -> Result<Self> {
        let c2 = angular_delta(p0.theta, p1.theta);
        let tilde_c4 = math::log(p1.sigma / p0.sigma);
        let c4 = m.h2 * tilde_c4;

        let mid = p0.theta + 0.5 * c2;
        let frame_sign = if (0.0..THETA_PERIOD).contains(&mid) { 1.0 } else { -1.0 };

        let radial = p0.sigma / m.h1;
        let (s11, s12, s21, s22) = spatial_block(p0.theta, c2, tilde_c4, radial, 1.0, frame_sign);
        let det = s11 * s22 - s12 * s21;
        // The block is an integral of rotation-dilation frames; it only
        // degenerates far outside the |c2| <= pi/2 regime produced by
        // angular_delta.
        let scale = (s11 * s11 + s12 * s12 + s21 * s21 + s22 * s22).max(f64::MIN_POSITIVE);
        if !det.is_finite() || math::fabs(det) < 1e-14 * scale {
            return Err(Error::SingularFlow {
                p0: p0.as_array(),
                p1: p1.as_array(),
            });
        }
        let dx = p1.x - p0.x;
        let dy = p1.y - p0.y;
        let c1 = (s22 * dx - s12 * dy) / det;
        let c3 = (-s21 * dx + s11 * dy) / det;

        Ok(Self {
            origin: *p0,
            coeff: FlowCoefficients { c1, c2, c3, c4 },
            tilde_c4,
            radial,
            frame_sign,
        })
    }

    pub fn coefficients(&self) -> FlowCoefficients {
        self.coeff
    }

    /// Starting orientation representative consistent with the frame the
    /// coefficients are expressed in: the stored canonical `theta0` when the
    /// frame sign is positive, `theta0 - pi` otherwise. Integrating the flow
    /// equations from this angle with [`Self::coefficients`] reproduces the
    /// geodesic.
    pub fn frame_origin_theta(&self) -> f64 {
        if self.frame_sign > 0.0 {
            self.origin.theta
        } else {
            self.origin.theta - THETA_PERIOD
        }
    }

    /// Flow distance between the endpoints.
    pub fn distance(&self) -> f64 {
        sqrt(self.coeff.norm_sq())
    }

    /// The flow point at time `t in [0, 1]`.
    ///
    /// `theta` is re-wrapped to `[0, pi)`; `x, y` may exit the image box
    /// (clamping is deferred to grid deposition).
    pub fn point(&self, t: f64) -> CortexPoint {
        let p0 = &self.origin;
        let c = &self.coeff;
        let (s11, s12, s21, s22) =
            spatial_block(p0.theta, c.c2, self.tilde_c4, self.radial, t, self.frame_sign);
        CortexPoint::new(
            p0.x + s11 * c.c1 + s12 * c.c3,
            p0.y + s21 * c.c1 + s22 * c.c3,
            p0.theta + c.c2 * t,
            p0.sigma * math::exp(self.tilde_c4 * t),
        )
    }
}

/// Entries of the time-`t` integral of the rotating, dilating spatial frame:
///
/// ```text
/// S_t = int_0^t [ cos(theta_s)  -(sigma_s/h1) sin(theta_s) ]
///               [ sin(theta_s)   (sigma_s/h1) cos(theta_s) ] ds
/// ```
///
/// with `theta_s = theta0 + c2 s` and `sigma_s = sigma0 exp(tilde_c4 s)`.
fn spatial_block(
    theta0: f64,
    c2: f64,
    tilde_c4: f64,
    radial: f64,
    t: f64,
    sign: f64,
) -> (f64, f64, f64, f64) {
    let phase = Complex64::new(0.0, theta0).exp() * sign;
    let z1 = phase * exp_integral(Complex64::new(0.0, c2), t);
    let z2 = phase * exp_integral(Complex64::new(tilde_c4, c2), t) * radial;
    (z1.re, -z2.im, z1.im, z2.re)
}

/// Fits the constant-coefficient flow between `p0` and `p1`.
///
/// `c2` is the shortest angular representative, `c4 = h2 ln(sigma1/sigma0)`,
/// and `(c1, c3)` solve the time-one spatial block for the displacement.
pub fn solve_flow(
    p0: &CortexPoint,
    p1: &CortexPoint,
    m: &MetricParams,
) -> Result<FlowCoefficients> {
    Geodesic::between(p0, p1, m).map(|g| g.coefficients())
}

/// Flow distance `d_c(p0, p1)`.
pub fn dc_distance(p0: &CortexPoint, p1: &CortexPoint, m: &MetricParams) -> Result<f64> {
    Geodesic::between(p0, p1, m).map(|g| g.distance())
}

/// Point at parameter `t` of the geodesic from `p0` to `p1`.
pub fn geodesic_point(
    p0: &CortexPoint,
    p1: &CortexPoint,
    t: f64,
    m: &MetricParams,
) -> Result<CortexPoint> {
    debug_assert!((0.0..=1.0).contains(&t));
    Geodesic::between(p0, p1, m).map(|g| g.point(t))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    const PI: f64 = core::f64::consts::PI;

    fn metric() -> MetricParams {
        MetricParams::new(0.7, 5.0)
    }

    fn random_point(rng: &mut ChaCha8Rng, d: f64) -> CortexPoint {
        CortexPoint::new(
            rng.gen_range(0.0..d),
            rng.gen_range(0.0..d),
            rng.gen_range(0.0..PI),
            rng.gen_range(1.1244..5.622),
        )
    }

    /// RK4 integration of the flow ODE system; the independent oracle for
    /// the closed-form geodesic.
    fn rk4_flow(
        p0: &CortexPoint,
        theta_start: f64,
        c: &FlowCoefficients,
        m: &MetricParams,
        steps: usize,
    ) -> [f64; 4] {
        let f = |s: &[f64; 4]| -> [f64; 4] {
            let (theta, sigma) = (s[2], s[3]);
            let (ct, st) = (math::cos(theta), math::sin(theta));
            [
                c.c1 * ct - c.c3 * (sigma / m.h1) * st,
                c.c1 * st + c.c3 * (sigma / m.h1) * ct,
                c.c2,
                c.c4 / m.h2 * sigma,
            ]
        };
        let mut s = [p0.x, p0.y, theta_start, p0.sigma];
        let h = 1.0 / steps as f64;
        for _ in 0..steps {
            let k1 = f(&s);
            let mut s2 = s;
            for i in 0..4 {
                s2[i] = s[i] + 0.5 * h * k1[i];
            }
            let k2 = f(&s2);
            for i in 0..4 {
                s2[i] = s[i] + 0.5 * h * k2[i];
            }
            let k3 = f(&s2);
            for i in 0..4 {
                s2[i] = s[i] + h * k3[i];
            }
            let k4 = f(&s2);
            for i in 0..4 {
                s[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
            }
        }
        s
    }

    #[test]
    fn angular_delta_examples() {
        assert_eq!(angular_delta(0.0, 0.0), 0.0);
        assert_relative_eq!(angular_delta(0.1, PI - 0.1), -0.2, epsilon = 1e-12);
        assert_relative_eq!(angular_delta(0.0, PI / 2.0), PI / 2.0, epsilon = 1e-15);
    }

    #[test]
    fn identical_endpoints_give_zero_flow() {
        let p = CortexPoint::new(3.0, 4.0, 1.0, 2.0);
        let c = solve_flow(&p, &p, &metric()).unwrap();
        assert_eq!(c, FlowCoefficients { c1: 0.0, c2: 0.0, c3: 0.0, c4: 0.0 });
        assert_eq!(dc_distance(&p, &p, &metric()).unwrap(), 0.0);
    }

    #[test]
    fn pure_rotation_has_only_c2() {
        let p0 = CortexPoint::new(5.0, 5.0, 0.3, 2.0);
        let p1 = CortexPoint::new(5.0, 5.0, 0.3 + PI / 2.0, 2.0);
        let c = solve_flow(&p0, &p1, &metric()).unwrap();
        assert_relative_eq!(c.c1, 0.0, epsilon = 1e-12);
        assert_relative_eq!(c.c3, 0.0, epsilon = 1e-12);
        assert_relative_eq!(c.c2, PI / 2.0, epsilon = 1e-12);
        assert_relative_eq!(c.c4, 0.0, epsilon = 1e-12);
    }

    #[test]
    fn pure_scale_pair_has_unit_distance() {
        let m = metric();
        let p0 = CortexPoint::new(1.0, 2.0, 0.5, 1.5);
        let p1 = CortexPoint::new(1.0, 2.0, 0.5, 1.5 * math::exp(1.0 / m.h2));
        assert_relative_eq!(dc_distance(&p0, &p1, &m).unwrap(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn closed_form_flow_agrees_with_rk4() {
        let m = metric();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..1000 {
            let p0 = random_point(&mut rng, 32.0);
            let p1 = random_point(&mut rng, 32.0);
            let g = Geodesic::between(&p0, &p1, &m).unwrap();
            let end = rk4_flow(&p0, g.frame_origin_theta(), &g.coefficients(), &m, 512);
            assert_relative_eq!(end[0], p1.x, epsilon = 1e-6);
            assert_relative_eq!(end[1], p1.y, epsilon = 1e-6);
            assert!(math::fabs(angular_delta(end[2], p1.theta)) < 1e-6);
            assert_relative_eq!(end[3], p1.sigma, epsilon = 1e-6);
        }
    }

    #[test]
    fn distance_is_symmetric() {
        let m = metric();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..1000 {
            let p0 = random_point(&mut rng, 32.0);
            let p1 = random_point(&mut rng, 32.0);
            let d01 = dc_distance(&p0, &p1, &m).unwrap();
            let d10 = dc_distance(&p1, &p0, &m).unwrap();
            assert!(math::fabs(d01 - d10) < 1e-9, "asymmetry {d01} vs {d10}");
        }
    }

    #[test]
    fn flow_reversal_negates_coefficients() {
        let m = metric();
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        for _ in 0..300 {
            let p0 = random_point(&mut rng, 32.0);
            let p1 = random_point(&mut rng, 32.0);
            let c01 = solve_flow(&p0, &p1, &m).unwrap();
            let c10 = solve_flow(&p1, &p0, &m).unwrap();
            assert_relative_eq!(c01.c1, -c10.c1, epsilon = 1e-9, max_relative = 1e-9);
            assert_relative_eq!(c01.c2, -c10.c2, epsilon = 1e-9, max_relative = 1e-9);
            assert_relative_eq!(c01.c3, -c10.c3, epsilon = 1e-9, max_relative = 1e-9);
            assert_relative_eq!(c01.c4, -c10.c4, epsilon = 1e-9, max_relative = 1e-9);
        }
    }

    #[test]
    fn geodesic_endpoints_are_exact() {
        let m = metric();
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for _ in 0..300 {
            let p0 = random_point(&mut rng, 32.0);
            let p1 = random_point(&mut rng, 32.0);
            let g0 = geodesic_point(&p0, &p1, 0.0, &m).unwrap();
            let g1 = geodesic_point(&p0, &p1, 1.0, &m).unwrap();
            for (a, b) in [(g0, p0), (g1, p1)] {
                assert_relative_eq!(a.x, b.x, epsilon = 1e-9, max_relative = 1e-9);
                assert_relative_eq!(a.y, b.y, epsilon = 1e-9, max_relative = 1e-9);
                assert!(math::fabs(angular_delta(a.theta, b.theta)) < 1e-9);
                assert_relative_eq!(a.sigma, b.sigma, epsilon = 1e-9, max_relative = 1e-9);
            }
        }
    }

    #[test]
    fn pure_translation_midpoint_is_euclidean() {
        let m = metric();
        let p0 = CortexPoint::new(2.0, 3.0, 0.8, 2.5);
        let p1 = CortexPoint::new(10.0, 27.0, 0.8, 2.5);
        let mid = geodesic_point(&p0, &p1, 0.5, &m).unwrap();
        assert_relative_eq!(mid.x, 6.0, epsilon = 1e-9);
        assert_relative_eq!(mid.y, 15.0, epsilon = 1e-9);
        assert_relative_eq!(mid.theta, 0.8, epsilon = 1e-9);
        assert_relative_eq!(mid.sigma, 2.5, epsilon = 1e-9);
    }

    #[test]
    fn geodesic_has_constant_speed() {
        let m = metric();
        let mut rng = ChaCha8Rng::seed_from_u64(19);
        for _ in 0..200 {
            let p0 = random_point(&mut rng, 32.0);
            let p1 = random_point(&mut rng, 32.0);
            let d = dc_distance(&p0, &p1, &m).unwrap();
            for t in [0.25, 0.5, 0.75] {
                let gt = geodesic_point(&p0, &p1, t, &m).unwrap();
                let dt = dc_distance(&p0, &gt, &m).unwrap();
                assert_relative_eq!(dt, t * d, max_relative = 1e-6, epsilon = 1e-9);
            }
            // segment [t, s] scales as (s - t) d
            let ga = geodesic_point(&p0, &p1, 0.25, &m).unwrap();
            let gb = geodesic_point(&p0, &p1, 0.75, &m).unwrap();
            let dab = dc_distance(&ga, &gb, &m).unwrap();
            assert_relative_eq!(dab, 0.5 * d, max_relative = 1e-5, epsilon = 1e-9);
        }
    }

    #[test]
    fn small_rotation_limit_is_consistent() {
        // the general branch extrapolated from c2 = 1e-4 must agree with the
        // series branch at c2 below the seam
        let m = metric();
        let base = CortexPoint::new(4.0, 9.0, 1.2, 2.0);
        let target = |dtheta: f64| CortexPoint::new(11.0, 5.0, 1.2 + dtheta, 3.1);
        let tiny = solve_flow(&base, &target(1e-8), &m).unwrap();
        let small = solve_flow(&base, &target(1e-4), &m).unwrap();
        let zero = solve_flow(&base, &target(0.0), &m).unwrap();
        // linear extrapolation of c1 across the seam
        let c1_extrap = zero.c1 + (small.c1 - zero.c1) * (1e-8 / 1e-4);
        assert_relative_eq!(tiny.c1, c1_extrap, max_relative = 1e-6);
        let c3_extrap = zero.c3 + (small.c3 - zero.c3) * (1e-8 / 1e-4);
        assert_relative_eq!(tiny.c3, c3_extrap, max_relative = 1e-6);
    }
}
