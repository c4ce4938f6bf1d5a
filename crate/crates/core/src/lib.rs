//! Rolling-shutter distortion estimation for vehicles under Ackermann motion.
//!
//! Vertical scene lines appear slanted in a rolling-shutter image when the
//! camera moves during readout. This crate estimates the per-row yaw and
//! translation (plus the planar scene depth) from such line segments with
//! minimal solvers inside RANSAC, simulates distorted data and rectifies
//! images with the estimated model.

// `!(x > 0.0)` style checks are used on purpose so that NaN is rejected.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod camera;
pub mod error;
pub mod model;
pub mod motion;
pub mod poly;
pub mod ransac;
pub mod rectify;
pub mod segment;
pub mod sim;
pub mod solvers;

pub use camera::{CameraModel, NormalizedPoint};
pub use error::{Error, Result};
pub use model::{AckermannModel, DepthModel, RsModel};
pub use segment::{PlaneSide, SegmentRs};
pub use solvers::{PlausibilityBounds, SolverCandidate, SolverKind};
