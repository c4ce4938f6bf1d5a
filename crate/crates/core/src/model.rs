//! Motion and depth parameters in solver units.
//!
//! Time is measured in image rows, so both motion rates are "per row" with the
//! readout delay absorbed. Lengths are in gauge units: the distance scale at
//! which the left vertical plane has inverse-depth slope 1. For a camera facing
//! along a straight road this is the distance to the left plane.
//!
//! The yaw angle reached after `t` rows is `2 * alpha_row * t` (the rotation in
//! the second-order pose is parameterized by half the yaw angle), so
//! `alpha_row = yaw_rate * tau / 2`. Translation after `t` rows is
//! `beta_row * t`, so `beta_row = speed * tau / gauge_length`.

use serde::{Deserialize, Serialize};

const KMH_PER_MPS: f64 = 3.6;

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct AckermannModel {
    /// Half of the yaw angle swept per row, radians.
    pub alpha_row: f64,
    /// Translation per row, gauge units.
    pub beta_row: f64,
}

impl AckermannModel {
    pub fn new(alpha_row: f64, beta_row: f64) -> Self {
        Self { alpha_row, beta_row }
    }

    /// Converts a yaw rate (deg/s) and a speed (km/h) into per-row gauge units.
    pub fn from_physical(
        yaw_rate_deg_s: f64,
        speed_kmh: f64,
        row_delay: f64,
        gauge_length_m: f64,
    ) -> Self {
        Self {
            alpha_row: yaw_rate_deg_s.to_radians() * row_delay / 2.0,
            beta_row: speed_kmh / KMH_PER_MPS * row_delay / gauge_length_m,
        }
    }

    /// Inverse of [`AckermannModel::from_physical`]: `(deg/s, km/h)`.
    pub fn to_physical(&self, row_delay: f64, gauge_length_m: f64) -> (f64, f64) {
        (
            (2.0 * self.alpha_row / row_delay).to_degrees(),
            self.beta_row * gauge_length_m / row_delay * KMH_PER_MPS,
        )
    }

    pub fn is_finite(&self) -> bool {
        self.alpha_row.is_finite() && self.beta_row.is_finite()
    }
}

/// Piecewise-planar inverse depth: two vertical planes meeting at the line at
/// infinity (normalized column `delta`) plus a ground plane.
///
/// The left plane slope is fixed to 1 (gauge). `lambda_ground` is the inverse
/// camera height in gauge units; it is supplied by the user and only used for
/// rectification.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct DepthModel {
    pub delta: f64,
    pub lambda_right: f64,
    pub lambda_ground: f64,
}

impl DepthModel {
    pub fn new(delta: f64, lambda_right: f64) -> Self {
        Self {
            delta,
            lambda_right,
            lambda_ground: 0.0,
        }
    }

    pub fn with_ground(mut self, lambda_ground: f64) -> Self {
        self.lambda_ground = lambda_ground;
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct RsModel {
    pub motion: AckermannModel,
    pub depth: DepthModel,
}

impl RsModel {
    pub fn new(alpha_row: f64, beta_row: f64, delta: f64, lambda_right: f64) -> Self {
        Self {
            motion: AckermannModel::new(alpha_row, beta_row),
            depth: DepthModel::new(delta, lambda_right),
        }
    }

    pub fn zero() -> Self {
        Self::default()
    }

    pub fn alpha(&self) -> f64 {
        self.motion.alpha_row
    }

    pub fn beta(&self) -> f64 {
        self.motion.beta_row
    }

    pub fn delta(&self) -> f64 {
        self.depth.delta
    }

    pub fn lambda(&self) -> f64 {
        self.depth.lambda_right
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const TAU: f64 = 0.4 / (30.0 * 380.0);

    #[test]
    fn conversion_matches_hand_values() {
        let m = AckermannModel::from_physical(90.0, 200.0, TAU, 2.5);
        assert!((m.alpha_row - std::f64::consts::FRAC_PI_2 * TAU / 2.0).abs() < 1e-18);
        assert!((m.beta_row - 200.0 / 3.6 * TAU / 2.5).abs() < 1e-18);
    }

    proptest! {
        #[test]
        fn physical_round_trip(deg in -90.0f64..90.0, kmh in -200.0f64..200.0) {
            let m = AckermannModel::from_physical(deg, kmh, TAU, 2.5);
            let (d, k) = m.to_physical(TAU, 2.5);
            prop_assert!((d - deg).abs() <= 1e-12 * (1.0 + deg.abs()));
            prop_assert!((k - kmh).abs() <= 1e-12 * (1.0 + kmh.abs()));
        }
    }
}
