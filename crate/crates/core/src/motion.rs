//! Ackermann poses, the rolling-shutter to global-shutter point map and the
//! vertical-line residuals built on it.

use nalgebra::{Matrix3, Vector3};

use crate::camera::{CameraModel, NormalizedPoint};
use crate::error::{Error, Result};
use crate::model::{DepthModel, RsModel};
use crate::segment::SegmentRs;

/// Compensation denominators below this magnitude are treated as singular.
pub const SINGULAR_DENOMINATOR: f64 = 1e-9;

/// Rigid motion of the camera at readout time `t` relative to time 0.
///
/// A world point `P` (expressed in the time-0 camera frame) has coordinates
/// `R (P - T)` in the camera frame at time `t`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PoseRT {
    pub rotation: Matrix3<f64>,
    pub translation: Vector3<f64>,
}

impl PoseRT {
    pub fn identity() -> Self {
        Self {
            rotation: Matrix3::identity(),
            translation: Vector3::zeros(),
        }
    }

    /// Coordinates of a time-0 point in the moved camera frame.
    pub fn to_camera(&self, p: &Vector3<f64>) -> Vector3<f64> {
        self.rotation * (p - self.translation)
    }

    /// Inverse of [`PoseRT::to_camera`].
    pub fn to_reference(&self, p: &Vector3<f64>) -> Vector3<f64> {
        self.rotation.transpose() * p + self.translation
    }
}

/// Exact circular-motion pose after yawing by `theta` along a chord of length
/// `rho`. The chord leaves at half the yaw angle (circular-motion constraint).
pub fn exact_pose(theta: f64, rho: f64) -> PoseRT {
    let (s, c) = theta.sin_cos();
    let (sh, ch) = (0.5 * theta).sin_cos();
    PoseRT {
        rotation: Matrix3::new(c, 0.0, -s, 0.0, 1.0, 0.0, s, 0.0, c),
        translation: Vector3::new(rho * sh, 0.0, rho * ch),
    }
}

/// Second-order Ackermann pose at `row` for per-row rates.
///
/// Terms of third and higher order in the motion parameters are absent; the
/// factor `gamma = sqrt(1 - (alpha t)^2)` keeps the translation direction at
/// unit norm.
pub fn second_order_pose(alpha_row: f64, beta_row: f64, row: f64) -> Result<PoseRT> {
    let a = alpha_row * row;
    if !(a.abs() < 1.0) {
        return Err(Error::PoseDomain(a.abs()));
    }
    let b = beta_row * row;
    let gamma = (1.0 - a * a).sqrt();
    let c = 1.0 - 2.0 * a * a;
    let s = 2.0 * a * gamma;
    Ok(PoseRT {
        rotation: Matrix3::new(c, 0.0, -s, 0.0, 1.0, 0.0, s, 0.0, c),
        translation: Vector3::new(b * a, 0.0, b * gamma),
    })
}

/// Piecewise-linear inverse depth at a normalized point.
///
/// Vertical planes give `[x - delta]_- + lambda [x - delta]_+`; with
/// `include_ground` the result is the maximum of that and `y * lambda_ground`.
pub fn inverse_depth(p: NormalizedPoint, depth: &DepthModel, include_ground: bool) -> f64 {
    inverse_depth_with_slope(p, depth, 1.0, include_ground)
}

pub(crate) fn inverse_depth_with_slope(
    p: NormalizedPoint,
    depth: &DepthModel,
    left_slope: f64,
    include_ground: bool,
) -> f64 {
    let d = p.x - depth.delta;
    let vertical = if d < 0.0 {
        -left_slope * d
    } else {
        depth.lambda_right * d
    };
    if include_ground {
        vertical.max(p.y * depth.lambda_ground)
    } else {
        vertical
    }
}

/// Maps a rolling-shutter point read out at `row` to its homogeneous
/// global-shutter position, given the inverse depth at that point.
///
/// The third coordinate of the result is 1 up to rounding.
pub fn compensate_with_inverse_depth(
    p_rs: NormalizedPoint,
    row: f64,
    alpha_row: f64,
    beta_row: f64,
    inv_depth: f64,
) -> Result<Vector3<f64>> {
    let a = alpha_row * row;
    let b = beta_row * row;
    let denom = 1.0 - 2.0 * p_rs.x * a;
    if denom.abs() < SINGULAR_DENOMINATOR {
        return Err(Error::SingularConfiguration(denom));
    }
    let bs = b * inv_depth;
    let scale = (1.0 - bs) / denom;
    // (I + 2[r]x) p with r = [0, a, 0]
    let rotated = Vector3::new(p_rs.x + 2.0 * a, p_rs.y, 1.0 - 2.0 * a * p_rs.x);
    Ok(rotated * scale + Vector3::new(a, 0.0, 1.0) * bs)
}

/// Global-shutter position of a rolling-shutter point, with the inverse depth
/// taken from the vertical planes evaluated at the rolling-shutter coordinates.
pub fn compensate_point(p_rs: NormalizedPoint, row: f64, model: &RsModel) -> Result<Vector3<f64>> {
    compensate_point_with_slope(p_rs, row, model, 1.0)
}

/// [`compensate_point`] with an explicit left-plane slope instead of the gauge
/// value 1. Scaling `beta` by `1/c` and both slopes by `c` leaves the result
/// unchanged.
pub fn compensate_point_with_slope(
    p_rs: NormalizedPoint,
    row: f64,
    model: &RsModel,
    left_slope: f64,
) -> Result<Vector3<f64>> {
    let inv_depth = inverse_depth_with_slope(p_rs, &model.depth, left_slope, false);
    compensate_with_inverse_depth(p_rs, row, model.alpha(), model.beta(), inv_depth)
}

/// `(u x v)^T e_y` for homogeneous endpoints: zero when the interpretation
/// plane contains the vertical axis.
#[inline]
pub fn vertical_residual_algebraic(u: &Vector3<f64>, v: &Vector3<f64>) -> f64 {
    u.z * v.x - u.x * v.z
}

/// Horizontal pixel offset between the compensated endpoints of a segment.
pub fn vertical_residual_px(seg: &SegmentRs, model: &RsModel, camera: &CameraModel) -> Result<f64> {
    let (r0, r1) = seg.rows();
    let u = compensate_point(seg.top_n, r0, model)?;
    let v = compensate_point(seg.bottom_n, r1, model)?;
    Ok(camera.focal_px * (u.x / u.z - v.x / v.z).abs())
}
