//! Synthetic two-walls-plus-ground scenes observed by a rolling-shutter camera
//! on a moving vehicle.
//!
//! World coordinates are the camera frame at readout time 0, in meters: x to
//! the right, y down, z forward. The ground is the plane `y = camera_height_m`.

mod image;
mod instances;
mod project;
mod render;

use nalgebra::Vector3;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::camera::CameraModel;
use crate::error::{Error, Result};
use crate::model::{AckermannModel, DepthModel, RsModel};
use crate::motion::{exact_pose, PoseRT};
use crate::segment::PlaneSide;

pub use self::image::{render_gs_image, render_rs_image, sample_bilinear};
pub use instances::{instance_for_model, minimal_instance, relative_error, MinimalInstance};
pub use project::{project_rs_exact, project_rs_second_order, ExactProjection};
pub use render::{render_segments, RenderMode, RenderedSegments, SegmentLabel};

const KMH_PER_MPS: f64 = 3.6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SceneConfig {
    /// Intrinsics and image size. The row delay is recomputed from
    /// `frame_rate` and `readout_fraction`.
    pub image: CameraModel,
    pub camera_height_m: f64,
    /// Perpendicular distance from the camera to the left wall.
    pub left_plane_dist_m: f64,
    pub right_plane_dist_m: f64,
    /// Angle between the viewing direction and the walls; moves the line at
    /// infinity away from the principal point.
    pub road_yaw_deg: f64,
    pub frame_rate: f64,
    pub readout_fraction: f64,
    /// Lines per wall.
    pub n_lines: usize,
    pub line_height_m: (f64, f64),
    pub depth_range_m: (f64, f64),
    pub outlier_fraction: f64,
    pub pixel_noise_std: f64,
    /// Rendered segments shorter than this are dropped.
    pub min_segment_len_px: f64,
    /// How line positions along each wall are drawn.
    pub line_sampling: LineSampling,
    /// Rows kept clear at the top and bottom of the frame.
    pub row_margin_px: f64,
    /// Columns kept clear at the left and right of the frame.
    pub col_margin_px: f64,
}

impl Default for SceneConfig {
    fn default() -> Self {
        let image = CameraModel::centered(816.0, 640, 380, 0.0).expect("default camera is valid");
        let mut cfg = Self {
            image,
            camera_height_m: 1.2,
            left_plane_dist_m: 2.5,
            right_plane_dist_m: 4.0,
            road_yaw_deg: 0.0,
            frame_rate: 30.0,
            readout_fraction: 0.4,
            n_lines: 20,
            line_height_m: (2.0, 5.0),
            depth_range_m: (4.0, 40.0),
            outlier_fraction: 0.0,
            pixel_noise_std: 0.0,
            min_segment_len_px: 35.0,
            line_sampling: LineSampling::UniformColumn,
            row_margin_px: 24.0,
            col_margin_px: 24.0,
        };
        cfg.image.row_delay = cfg.row_delay();
        cfg
    }
}

impl SceneConfig {
    /// `readout_fraction / (frame_rate * height)` seconds per row.
    pub fn row_delay(&self) -> f64 {
        self.readout_fraction / (self.frame_rate * self.image.height as f64)
    }

    /// Camera with the row delay and frame rate of this configuration.
    pub fn camera(&self) -> CameraModel {
        CameraModel {
            row_delay: self.row_delay(),
            frame_rate: self.frame_rate,
            ..self.image
        }
    }

    fn yaw(&self) -> f64 {
        self.road_yaw_deg.to_radians()
    }

    /// Length unit of the solver: the left wall has inverse-depth slope 1.
    pub fn gauge_length_m(&self) -> f64 {
        self.left_plane_dist_m / self.yaw().cos()
    }

    /// True depth parameters in gauge units.
    pub fn depth_truth(&self) -> DepthModel {
        DepthModel::new(self.yaw().tan(), self.left_plane_dist_m / self.right_plane_dist_m)
            .with_ground(self.gauge_length_m() / self.camera_height_m)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidConfig(m.to_string()));
        self.camera().validate()?;
        if !(self.camera_height_m > 0.0
            && self.left_plane_dist_m > 0.0
            && self.right_plane_dist_m > 0.0)
        {
            return bad("distances must be positive");
        }
        if !(self.frame_rate > 0.0) {
            return bad("frame rate must be positive");
        }
        if !(self.readout_fraction > 0.0 && self.readout_fraction <= 1.0) {
            return bad("readout fraction must lie in (0, 1]");
        }
        if !(self.road_yaw_deg.abs() < 60.0) {
            return bad("road yaw must be below 60 degrees");
        }
        let (h0, h1) = self.line_height_m;
        let (z0, z1) = self.depth_range_m;
        if !(h0 > 0.0 && h1 >= h0 && z0 > 0.0 && z1 >= z0) {
            return bad("line height and depth ranges must be positive and ordered");
        }
        if !(0.0..=1.0).contains(&self.outlier_fraction) {
            return bad("outlier fraction must lie in [0, 1]");
        }
        if !(self.pixel_noise_std >= 0.0) {
            return bad("pixel noise must be non-negative");
        }
        Ok(())
    }

    /// Wall and ground planes.
    pub fn planes(&self) -> [Plane; 3] {
        let (s, c) = self.yaw().sin_cos();
        let n = Vector3::new(c, 0.0, -s);
        [
            Plane {
                kind: Surface::Wall(PlaneSide::Left),
                normal: n,
                offset: -self.left_plane_dist_m,
            },
            Plane {
                kind: Surface::Wall(PlaneSide::Right),
                normal: n,
                offset: self.right_plane_dist_m,
            },
            Plane {
                kind: Surface::Ground,
                normal: Vector3::y(),
                offset: self.camera_height_m,
            },
        ]
    }

    /// Unit vector along the walls, pointing forward.
    pub fn road_direction(&self) -> Vector3<f64> {
        let (s, c) = self.yaw().sin_cos();
        Vector3::new(s, 0.0, c)
    }
}

/// Distribution of line positions along a wall.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LineSampling {
    /// Uniform over the image columns showing the wall.
    #[default]
    UniformColumn,
    /// Uniform in depth over the visible part of the wall.
    UniformDepth,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Surface {
    Wall(PlaneSide),
    Ground,
}

/// `normal . P = offset`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Plane {
    pub kind: Surface,
    pub normal: Vector3<f64>,
    pub offset: f64,
}

impl Plane {
    /// Ray parameter of the intersection with `origin + s * dir`, if in front.
    pub fn intersect(&self, origin: &Vector3<f64>, dir: &Vector3<f64>) -> Option<f64> {
        let den = self.normal.dot(dir);
        if den.abs() < 1e-12 {
            return None;
        }
        let s = (self.offset - self.normal.dot(origin)) / den;
        (s > 0.0).then_some(s)
    }
}

/// Vehicle motion during readout, with its solver-unit equivalent.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MotionTruth {
    pub angular_velocity_deg_s: f64,
    pub translational_velocity_kmh: f64,
    pub alpha_row: f64,
    pub beta_row: f64,
    pub row_delay: f64,
    pub gauge_length_m: f64,
}

impl MotionTruth {
    pub fn new(deg_s: f64, kmh: f64, row_delay: f64, gauge_length_m: f64) -> Self {
        let m = AckermannModel::from_physical(deg_s, kmh, row_delay, gauge_length_m);
        Self {
            angular_velocity_deg_s: deg_s,
            translational_velocity_kmh: kmh,
            alpha_row: m.alpha_row,
            beta_row: m.beta_row,
            row_delay,
            gauge_length_m,
        }
    }

    /// Motion for the given per-row rates.
    pub fn from_rows(alpha_row: f64, beta_row: f64, row_delay: f64, gauge_length_m: f64) -> Self {
        let (deg_s, kmh) =
            AckermannModel::new(alpha_row, beta_row).to_physical(row_delay, gauge_length_m);
        Self {
            angular_velocity_deg_s: deg_s,
            translational_velocity_kmh: kmh,
            alpha_row,
            beta_row,
            row_delay,
            gauge_length_m,
        }
    }

    pub fn for_scene(cfg: &SceneConfig, deg_s: f64, kmh: f64) -> Self {
        Self::new(deg_s, kmh, cfg.row_delay(), cfg.gauge_length_m())
    }

    pub fn ackermann(&self) -> AckermannModel {
        AckermannModel::new(self.alpha_row, self.beta_row)
    }

    /// Exact circular-arc pose at `row`, translation in meters.
    pub fn pose_at(&self, row: f64) -> PoseRT {
        let t = self.row_delay * row;
        let omega = self.angular_velocity_deg_s.to_radians();
        let v = self.translational_velocity_kmh / KMH_PER_MPS;
        let theta = omega * t;
        let rho = if omega.abs() * t > 1e-9 {
            2.0 * v / omega * (0.5 * theta).sin()
        } else {
            // Chord of a nearly straight arc.
            v * t * (1.0 - theta * theta / 24.0)
        };
        exact_pose(theta, rho)
    }

    /// Solver-unit model for a scene.
    pub fn rs_model(&self, cfg: &SceneConfig) -> RsModel {
        RsModel {
            motion: self.ackermann(),
            depth: cfg.depth_truth(),
        }
    }
}

/// A straight 3D line on one of the walls.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SceneLine {
    pub top: Vector3<f64>,
    pub bottom: Vector3<f64>,
    pub side: PlaneSide,
    /// Tilted away from vertical.
    pub outlier: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scene {
    pub config: SceneConfig,
    pub lines: Vec<SceneLine>,
}

/// Clips the line to the rows `[lo, hi]` of its zero-motion projection.
fn clip_to_rows(line: &mut SceneLine, cam: &CameraModel, lo: f64, hi: f64) -> bool {
    let (b, t) = (line.bottom, line.top);
    let d = t - b;
    let row_y = |row: f64| (row - cam.principal_point.1) / cam.focal_px;
    // Y(s) - y Z(s) = 0 is linear in s.
    let solve = |y: f64| {
        let den = d.y - y * d.z;
        (den.abs() > 1e-15).then(|| (y * b.z - b.y) / den)
    };
    let row_of = |p: Vector3<f64>| cam.principal_point.1 + cam.focal_px * p.y / p.z;
    let (mut s0, mut s1) = (0.0_f64, 1.0_f64);
    let (r0, r1) = (row_of(b), row_of(t));
    // Bottom endpoint has the larger row for upright lines.
    if r0 > hi {
        match solve(row_y(hi)) {
            Some(s) => s0 = s,
            None => return false,
        }
    }
    if r1 < lo {
        match solve(row_y(lo)) {
            Some(s) => s1 = s,
            None => return false,
        }
    }
    if !(s0 < s1) || r0 < lo || r1 > hi {
        return false;
    }
    line.bottom = b + d * s0;
    line.top = b + d * s1;
    true
}

/// Samples vertical lines on both walls, plus tilted outliers.
///
/// Columns are drawn uniformly over the part of the image where each wall is
/// visible within the configured depth range. Lines stand on the ground and
/// are clipped to the visible rows at zero motion.
pub fn make_scene(cfg: &SceneConfig, seed: u64) -> Scene {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let cam = cfg.camera();
    let depth = cfg.depth_truth();
    let cos = cfg.yaw().cos();
    let (x_img0, x_img1) = {
        let m = cfg.col_margin_px;
        (
            cam.normalize_x(m),
            cam.normalize_x(cam.width as f64 - 1.0 - m),
        )
    };
    let (z0, z1) = cfg.depth_range_m;
    let road = cfg.road_direction();
    let mut lines = Vec::new();
    for side in [PlaneSide::Left, PlaneSide::Right] {
        // |x - delta| = dist / (Z cos) on each wall.
        let dist = match side {
            PlaneSide::Left => cfg.left_plane_dist_m,
            PlaneSide::Right => cfg.right_plane_dist_m,
        };
        let (near, far) = (dist / (z0 * cos), dist / (z1 * cos));
        let (lo, hi) = match side {
            PlaneSide::Left => ((depth.delta - near).max(x_img0), (depth.delta - far).min(x_img1)),
            PlaneSide::Right => ((depth.delta + far).max(x_img0), (depth.delta + near).min(x_img1)),
        };
        for _ in 0..cfg.n_lines {
            let u: f64 = rng.random_range(0.0..1.0);
            let x = match cfg.line_sampling {
                LineSampling::UniformColumn => u * (hi - lo) + lo,
                LineSampling::UniformDepth => {
                    // |x - delta| is inversely proportional to depth.
                    let (a, b) = ((lo - depth.delta).abs(), (hi - depth.delta).abs());
                    let (z_a, z_b) = (1.0 / a.max(1e-12), 1.0 / b.max(1e-12));
                    let z = z_a + u * (z_b - z_a);
                    depth.delta + (lo - depth.delta).signum() * (1.0 / z)
                }
            };
            let height = rng.random_range(0.0..=1.0) * (cfg.line_height_m.1 - cfg.line_height_m.0)
                + cfg.line_height_m.0;
            let outlier = rng.random::<f64>() < cfg.outlier_fraction;
            let tilt = rng.random_range(3.0_f64..=15.0).to_radians()
                * if rng.random::<bool>() { 1.0 } else { -1.0 };
            if !(hi > lo) {
                continue;
            }
            let z = dist / (cos * (x - depth.delta).abs());
            let bottom = Vector3::new(x * z, cfg.camera_height_m, z);
            let up = if outlier {
                -Vector3::y() * tilt.cos() + road * tilt.sin()
            } else {
                -Vector3::y()
            };
            let mut line = SceneLine {
                top: bottom + up * height,
                bottom,
                side,
                outlier,
            };
            let lo_row = cfg.row_margin_px;
            let hi_row = cam.height as f64 - 1.0 - cfg.row_margin_px;
            if clip_to_rows(&mut line, &cam, lo_row, hi_row) {
                lines.push(line);
            }
        }
    }
    Scene {
        config: *cfg,
        lines,
    }
}
