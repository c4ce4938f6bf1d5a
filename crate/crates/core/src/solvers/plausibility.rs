use serde::{Deserialize, Serialize};

use crate::camera::CameraModel;
use crate::model::{AckermannModel, RsModel};

/// Physical ranges outside of which solver roots are discarded.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlausibilityBounds {
    /// Largest accepted `|alpha_row|`.
    pub alpha_max: f64,
    /// Largest accepted `|beta_row|`.
    pub beta_max: f64,
    /// Accepted range of the line-at-infinity column (normalized x).
    pub delta_min: f64,
    pub delta_max: f64,
}

pub const DEFAULT_MAX_YAW_RATE_DEG_S: f64 = 90.0;
pub const DEFAULT_MAX_SPEED_KMH: f64 = 200.0;
/// Margin added on both sides of the normalized image width for `delta`.
pub const DEFAULT_DELTA_MARGIN: f64 = 0.25;

impl PlausibilityBounds {
    pub fn from_physical(
        max_yaw_rate_deg_s: f64,
        max_speed_kmh: f64,
        row_delay: f64,
        gauge_length_m: f64,
        camera: &CameraModel,
        delta_margin: f64,
    ) -> Self {
        let m = AckermannModel::from_physical(
            max_yaw_rate_deg_s,
            max_speed_kmh,
            row_delay,
            gauge_length_m,
        );
        let (x0, x1) = camera.normalized_x_range();
        Self {
            alpha_max: m.alpha_row.abs(),
            beta_max: m.beta_row.abs(),
            delta_min: x0 - delta_margin,
            delta_max: x1 + delta_margin,
        }
    }

    /// 90 deg/s and 200 km/h at the camera's row delay.
    pub fn vehicle_defaults(camera: &CameraModel, gauge_length_m: f64) -> Self {
        Self::from_physical(
            DEFAULT_MAX_YAW_RATE_DEG_S,
            DEFAULT_MAX_SPEED_KMH,
            camera.row_delay,
            gauge_length_m,
            camera,
            DEFAULT_DELTA_MARGIN,
        )
    }

    pub fn unbounded() -> Self {
        Self {
            alpha_max: f64::INFINITY,
            beta_max: f64::INFINITY,
            delta_min: f64::NEG_INFINITY,
            delta_max: f64::INFINITY,
        }
    }

    pub fn motion_ok(&self, alpha: f64, beta: f64) -> bool {
        alpha.abs() <= self.alpha_max && beta.abs() <= self.beta_max
    }

    pub fn delta_ok(&self, delta: f64) -> bool {
        delta >= self.delta_min && delta <= self.delta_max
    }
}

/// True iff the model lies inside the closed bounds and has a non-negative
/// right-plane inverse depth.
pub fn plausibility_filter(model: &RsModel, bounds: &PlausibilityBounds) -> bool {
    bounds.motion_ok(model.alpha(), model.beta())
        && bounds.delta_ok(model.delta())
        && model.lambda() >= 0.0
}
