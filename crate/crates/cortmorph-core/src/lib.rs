//! Cortical image morphing between grayscale images.
//!
//! An image is lifted to a signed coefficient field on a discretized
//! position–orientation–scale domain through a Gabor wavelet pyramid. The
//! positive and negative parts of each channel are normalized into
//! probability measures, transported along constant-speed geodesics of an
//! anisotropic roto-dilation metric via entropically regularized optimal
//! transport, and the transported coefficients are projected back to image
//! space through the frame synthesis operator.
//!
//! The crate is organized as:
//!
//! - [`gabor`] — continuous Gabor family, wavelet pyramid, analysis/synthesis;
//! - [`geometry`] — the flow distance `d_c` and its geodesics on the lifted
//!   domain;
//! - [`lifting`] — signed-coefficient splitting, support truncation, and
//!   grid deposition;
//! - [`transport`] — cost matrices, log-domain Sinkhorn, displacement
//!   interpolation;
//! - [`pipeline`] — the full morph, a planar optimal-transport baseline, and
//!   shape metrics;
//! - [`verify`] — numerical verification of the analytic identities the
//!   model rests on;
//! - [`shapes`] — synthetic letter images used by tests and examples.
//!
//! The crate is `no_std`-compatible (with `alloc`); the `std` feature is on
//! by default and `parallel` enables multithreaded inner loops via rayon.
//! Parallel loops only ever map independent output slots, so results are
//! bitwise identical regardless of thread count.

#![cfg_attr(not(feature = "std"), no_std)]

extern crate alloc;

pub mod error;
pub mod gabor;
pub mod geometry;
pub mod lifting;
pub mod math;
pub mod pipeline;
pub mod shapes;
pub mod transport;
pub mod verify;

pub use error::{Error, Result};
pub use gabor::{GaborParams, Image, PyramidGrid, SignedLift};
pub use geometry::{CortexPoint, FlowCoefficients, MetricParams};
pub use lifting::{ChannelSplit, SplatMode, WeightedCloud};
pub use pipeline::{FrameSequence, MorphConfig};
pub use transport::{CostMatrix, TransportPlan};
