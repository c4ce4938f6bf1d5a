use nalgebra::Vector3;

use crate::camera::{CameraModel, NormalizedPoint};
use crate::model::RsModel;
use crate::motion::compensate_with_inverse_depth;
use crate::segment::PlaneSide;

use super::MotionTruth;

const ROW_TOL: f64 = 1e-6;
const MAX_ITERATIONS: usize = 50;

/// Rolling-shutter observation of a 3D point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExactProjection {
    pub pixel: (f64, f64),
    /// Depth in the camera frame at the readout time.
    pub depth: f64,
    pub iterations: usize,
}

/// Projects a time-0 point with the exact pose of the row it is read out on.
///
/// The row is found by fixed-point iteration starting at the zero-motion row.
/// Returns `None` if the point falls behind the camera, the iteration does not
/// settle, or the settled row lies outside the image.
pub fn project_rs_exact(
    p: &Vector3<f64>,
    motion: &MotionTruth,
    cam: &CameraModel,
) -> Option<ExactProjection> {
    let (cx, cy) = cam.principal_point;
    let f = cam.focal_px;
    if p.z <= 0.0 {
        return None;
    }
    let mut row = cy + f * p.y / p.z;
    for it in 1..=MAX_ITERATIONS {
        let q = motion.pose_at(row).to_camera(p);
        if q.z <= 0.0 {
            return None;
        }
        let next = cy + f * q.y / q.z;
        if (next - row).abs() < ROW_TOL {
            let q = motion.pose_at(next).to_camera(p);
            let last_row = (cam.height - 1) as f64;
            return (-ROW_TOL..=last_row + ROW_TOL).contains(&next).then_some(ExactProjection {
                pixel: (cx + f * q.x / q.z, cy + f * q.y / q.z),
                depth: q.z,
                iterations: it,
            });
        }
        row = next;
    }
    None
}

/// Rolling-shutter pixel whose compensation under `model` (with the inverse
/// depth of `side`) is the global-shutter projection `gs`.
///
/// This is the forward model the solvers invert, so segments rendered with it
/// satisfy the solver constraints up to rounding.
pub fn project_rs_second_order(
    gs: NormalizedPoint,
    side: PlaneSide,
    model: &RsModel,
    cam: &CameraModel,
) -> Option<(f64, f64)> {
    let (alpha, beta) = (model.alpha(), model.beta());
    let (delta, lambda) = (model.delta(), model.lambda());
    let sigma = |x: f64| match side {
        PlaneSide::Left => delta - x,
        PlaneSide::Right => lambda * (x - delta),
    };
    let map = |x: f64, row: f64| {
        let y = (row - cam.principal_point.1) / cam.focal_px;
        compensate_with_inverse_depth(NormalizedPoint::new(x, y), row, alpha, beta, sigma(x)).ok()
    };
    let (mut x, mut row) = (gs.x, cam.denormalize(gs).1);
    for _ in 0..100 {
        // Column for the current row by Newton, then the row from the
        // vertical scale at that column.
        for _ in 0..30 {
            let g = map(x, row)?.x - gs.x;
            let h = 1e-7 * (1.0 + x.abs());
            let d = (map(x + h, row)?.x - map(x - h, row)?.x) / (2.0 * h);
            if d == 0.0 {
                return None;
            }
            let step = g / d;
            x -= step;
            if step.abs() <= 1e-16 * (1.0 + x.abs()) {
                break;
            }
        }
        let scale = (1.0 - beta * row * sigma(x)) / (1.0 - 2.0 * x * alpha * row);
        let next = cam.principal_point.1 + cam.focal_px * gs.y / scale;
        let done = (next - row).abs() <= 1e-12 * (1.0 + row.abs());
        row = next;
        if done {
            break;
        }
    }
    let y = (row - cam.principal_point.1) / cam.focal_px;
    let u = map(x, row)?;
    let ok = (u.x - gs.x).abs() < 1e-12 && (u.y - gs.y).abs() < 1e-12;
    ok.then(|| cam.denormalize(NormalizedPoint::new(x, y)))
}
