//! Error types shared across the crate.

use alloc::string::String;
use thiserror::Error;

/// Errors reported by the morphing pipeline and its building blocks.
///
/// Messages name the operation that failed so that callers (and the CLI)
/// can report actionable diagnostics.
#[derive(Debug, Clone, Error)]
pub enum Error {
    /// Invalid configuration value.
    #[error("config: {0}")]
    Config(String),

    /// Image dimensions do not match what the operation requires.
    #[error("{op}: expected {expected_w}x{expected_h} image, got {got_w}x{got_h}")]
    Shape {
        op: &'static str,
        expected_w: usize,
        expected_h: usize,
        got_w: usize,
        got_h: usize,
    },

    /// A Gabor filter was requested at a nonpositive scale.
    #[error("continuous_gabor: nonpositive sigma {0}")]
    NonpositiveSigma(f64),

    /// The alpha field is undefined where tan(2 y_k) vanishes.
    #[error("alpha_field: sample lies on the singular set (|tan(2 y_k)| = {0:.3e})")]
    AlphaSingular(f64),

    /// A split or truncation produced a measure with no support.
    #[error("{0}: measure has empty support")]
    EmptyMeasure(&'static str),

    /// The flow system connecting two points is numerically singular.
    #[error("solve_flow: singular flow matrix for pair p0={p0:?}, p1={p1:?}")]
    SingularFlow { p0: [f64; 4], p1: [f64; 4] },

    /// Sinkhorn produced non-finite potentials.
    #[error("sinkhorn: non-finite potentials at iteration {iteration}; increase epsilon (= {epsilon})")]
    SinkhornDiverged { iteration: usize, epsilon: f64 },

    /// A quadrature failed to converge to the requested accuracy.
    #[error("{op}: quadrature did not converge (last relative change {rel_change:.3e})")]
    Accuracy { op: &'static str, rel_change: f64 },

    /// Frame-constant calibration received no usable calibration images.
    #[error("calibrate_frame_constant: {0}")]
    Calibration(&'static str),

    /// An error from a lower operation, tagged with where it happened.
    #[error("{context}: {source}")]
    Context { context: String, source: alloc::boxed::Box<Error> },
}

impl Error {
    /// Wraps the error with a location tag (pipeline stage, channel, sign).
    pub fn in_context(self, context: impl Into<String>) -> Self {
        Error::Context { context: context.into(), source: alloc::boxed::Box::new(self) }
    }
}

pub type Result<T> = core::result::Result<T, Error>;
