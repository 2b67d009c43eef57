//! Scalar math shim and small numeric helpers.
//!
//! All transcendental functions go through [`libm`] so the crate builds
//! without `std` and produces identical bits in both modes.

use num_complex::Complex64;

pub use libm::{atan2, cbrt, ceil, cos, cosh, exp, expm1, fabs, floor, hypot, log, log2, pow,
               round, sin, sinh, sqrt, tan};

/// Shortest signed representative of `x` modulo `period`, in
/// `(-period/2, period/2]`.
pub fn wrap_signed(x: f64, period: f64) -> f64 {
    let mut r = x - period * round(x / period);
    if r <= -0.5 * period {
        r += period;
    }
    r
}

/// Canonical representative of `x` modulo `period`, in `[0, period)`.
pub fn wrap_canonical(x: f64, period: f64) -> f64 {
    let mut r = x - period * floor(x / period);
    // floor rounding can land exactly on the period
    if r >= period {
        r -= period;
    }
    if r < 0.0 {
        r += period;
    }
    r
}

/// Numerically stable `log(sum_i exp(x_i)))`.
pub fn logsumexp(xs: impl Iterator<Item = f64> + Clone) -> f64 {
    let mut max = f64::NEG_INFINITY;
    for x in xs.clone() {
        if x > max {
            max = x;
        }
    }
    if !max.is_finite() {
        return max;
    }
    let mut sum = 0.0;
    for x in xs {
        sum += exp(x - max);
    }
    max + log(sum)
}

/// `sinh(u)/u` for complex `u`, with the removable singularity at 0 filled
/// by its Taylor expansion. Accurate for all magnitudes: `sinh` and `sin`
/// are odd, so the quotient involves no cancellation.
pub fn sinhc(u: Complex64) -> Complex64 {
    if u.norm_sqr() < 1e-16 {
        let u2 = u * u;
        Complex64::new(1.0, 0.0) + u2 / 6.0 + u2 * u2 / 120.0
    } else {
        u.sinh() / u
    }
}

/// `(exp(w t) - 1) / w`, the time integral of `exp(w s)` on `[0, t]`.
///
/// Evaluated as `t * exp(wt/2) * sinhc(wt/2)`, which is exact at the
/// removable singularity `w = 0` and has no cancellation for small `|w t|`.
pub fn exp_integral(w: Complex64, t: f64) -> Complex64 {
    let u = w * (0.5 * t);
    u.exp() * sinhc(u) * t
}

/// Dot product of two slices.
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    let mut s = 0.0;
    for (x, y) in a.iter().zip(b) {
        s += x * y;
    }
    s
}

/// Squared Euclidean norm of a slice.
pub fn norm_sq(a: &[f64]) -> f64 {
    dot(a, a)
}

/// Relative L2 distance `|a - b| / |b|`.
pub fn rel_l2(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    let mut num = 0.0;
    let mut den = 0.0;
    for (x, y) in a.iter().zip(b) {
        num += (x - y) * (x - y);
        den += y * y;
    }
    sqrt(num / den)
}
