//! Pinhole intrinsics with a per-row readout delay.
//!
//! Pixels are `(column, row)` with row 0 at the top of the image. Normalized
//! image-plane coordinates are `((px - cx) / f, (py - cy) / f)` with an implicit
//! homogeneous third coordinate of 1.

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A point on the image plane (pixel pre-multiplied by the inverse intrinsics).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormalizedPoint {
    pub x: f64,
    pub y: f64,
}

impl NormalizedPoint {
    pub fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn homogeneous(&self) -> Vector3<f64> {
        Vector3::new(self.x, self.y, 1.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CameraModel {
    pub focal_px: f64,
    pub principal_point: (f64, f64),
    pub width: u32,
    pub height: u32,
    /// Readout delay between two successive rows, in seconds.
    pub row_delay: f64,
    /// Frame rate in Hz. Metadata only.
    pub frame_rate: f64,
}

impl CameraModel {
    pub fn new(
        focal_px: f64,
        principal_point: (f64, f64),
        width: u32,
        height: u32,
        row_delay: f64,
        frame_rate: f64,
    ) -> Result<Self> {
        let cam = Self {
            focal_px,
            principal_point,
            width,
            height,
            row_delay,
            frame_rate,
        };
        cam.validate()?;
        Ok(cam)
    }

    /// Camera with the principal point at the image center.
    pub fn centered(focal_px: f64, width: u32, height: u32, row_delay: f64) -> Result<Self> {
        Self::new(
            focal_px,
            (width as f64 / 2.0, height as f64 / 2.0),
            width,
            height,
            row_delay,
            0.0,
        )
    }

    /// Fallback for uncalibrated sources: focal length 0.9 times the larger
    /// image dimension and a centered principal point.
    pub fn uncalibrated(width: u32, height: u32, row_delay: f64) -> Result<Self> {
        Self::centered(0.9 * width.max(height) as f64, width, height, row_delay)
    }

    pub fn validate(&self) -> Result<()> {
        let (cx, cy) = self.principal_point;
        if !(self.focal_px.is_finite() && self.focal_px > 0.0) {
            return Err(Error::InvalidCamera(format!(
                "focal length must be positive, got {}",
                self.focal_px
            )));
        }
        if self.width == 0 || self.height == 0 {
            return Err(Error::InvalidCamera("image size must be non-zero".into()));
        }
        if !(cx >= 0.0 && cx < self.width as f64 && cy >= 0.0 && cy < self.height as f64) {
            return Err(Error::InvalidCamera(format!(
                "principal point ({cx}, {cy}) outside {}x{} image",
                self.width, self.height
            )));
        }
        if !(self.row_delay.is_finite() && self.row_delay >= 0.0) {
            return Err(Error::InvalidCamera(format!(
                "row delay must be non-negative, got {}",
                self.row_delay
            )));
        }
        Ok(())
    }

    #[inline]
    pub fn normalize(&self, pixel: (f64, f64)) -> NormalizedPoint {
        let (cx, cy) = self.principal_point;
        NormalizedPoint {
            x: (pixel.0 - cx) / self.focal_px,
            y: (pixel.1 - cy) / self.focal_px,
        }
    }

    #[inline]
    pub fn denormalize(&self, p: NormalizedPoint) -> (f64, f64) {
        let (cx, cy) = self.principal_point;
        (p.x * self.focal_px + cx, p.y * self.focal_px + cy)
    }

    /// Normalized x of pixel column `col`.
    #[inline]
    pub fn normalize_x(&self, col: f64) -> f64 {
        (col - self.principal_point.0) / self.focal_px
    }

    /// Range of normalized x covered by the image columns `[0, width]`.
    pub fn normalized_x_range(&self) -> (f64, f64) {
        (self.normalize_x(0.0), self.normalize_x(self.width as f64))
    }

    pub fn contains(&self, pixel: (f64, f64)) -> bool {
        pixel.0 >= 0.0
            && pixel.1 >= 0.0
            && pixel.0 <= (self.width - 1) as f64
            && pixel.1 <= (self.height - 1) as f64
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn reference_camera() -> CameraModel {
        CameraModel::new(816.0, (320.0, 190.0), 640, 380, 0.0, 30.0).unwrap()
    }

    #[test]
    fn principal_point_maps_to_origin() {
        let cam = reference_camera();
        assert_eq!(cam.normalize((320.0, 190.0)), NormalizedPoint::new(0.0, 0.0));
        assert_eq!(cam.denormalize(NormalizedPoint::new(0.0, 0.0)), (320.0, 190.0));
    }

    #[test]
    fn one_focal_length_right_is_unit_x() {
        let cam = reference_camera();
        assert_eq!(cam.normalize((320.0 + 816.0, 190.0)), NormalizedPoint::new(1.0, 0.0));
        assert_eq!(cam.denormalize(NormalizedPoint::new(1.0, 0.0)), (1136.0, 190.0));
    }

    #[test]
    fn rejects_invalid_intrinsics() {
        assert!(CameraModel::new(0.0, (1.0, 1.0), 4, 4, 0.0, 0.0).is_err());
        assert!(CameraModel::new(1.0, (4.0, 1.0), 4, 4, 0.0, 0.0).is_err());
        assert!(CameraModel::new(1.0, (1.0, 1.0), 4, 4, -1e-6, 0.0).is_err());
    }

    #[test]
    fn uncalibrated_fallback() {
        let cam = CameraModel::uncalibrated(520, 360, 0.0).unwrap();
        assert!((cam.focal_px - 468.0).abs() < 1e-12);
        assert_eq!(cam.principal_point, (260.0, 180.0));
    }

    proptest! {
        #[test]
        fn round_trip(px in 0.0f64..640.0, py in 0.0f64..380.0) {
            let cam = reference_camera();
            let (qx, qy) = cam.denormalize(cam.normalize((px, py)));
            prop_assert!((qx - px).abs() < 1e-12 && (qy - py).abs() < 1e-12);
        }

        #[test]
        fn normalize_is_affine(
            ax in -100.0f64..700.0, ay in -50.0f64..400.0,
            bx in -100.0f64..700.0, by in -50.0f64..400.0,
            t in 0.0f64..1.0,
        ) {
            let cam = reference_camera();
            let mix = cam.normalize((t * ax + (1.0 - t) * bx, t * ay + (1.0 - t) * by));
            let na = cam.normalize((ax, ay));
            let nb = cam.normalize((bx, by));
            prop_assert!((mix.x - (t * na.x + (1.0 - t) * nb.x)).abs() < 1e-12);
            prop_assert!((mix.y - (t * na.y + (1.0 - t) * nb.y)).abs() < 1e-12);
        }
    }
}
