use serde::{Deserialize, Serialize};

use crate::camera::{CameraModel, NormalizedPoint};
use crate::error::{Error, Result};

/// Which vertical scene plane a segment is attributed to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum PlaneSide {
    Left,
    Right,
}

/// A line segment as observed in the rolling-shutter image.
///
/// Endpoints are stored in canonical order: `top` has the smaller row. Rows are
/// the (sub-pixel) pixel y coordinates of the endpoints and double as the
/// readout time in units of the row delay.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SegmentRs {
    /// Index of the segment in the list it was loaded or synthesized from.
    pub id: usize,
    pub top: (f64, f64),
    pub bottom: (f64, f64),
    pub top_n: NormalizedPoint,
    pub bottom_n: NormalizedPoint,
    pub length_px: f64,
}

impl SegmentRs {
    /// Builds a segment from two pixel endpoints in any order.
    ///
    /// Fails for non-finite endpoints or when both endpoints share a row, since a
    /// horizontal segment has no canonical top.
    pub fn new(camera: &CameraModel, id: usize, a: (f64, f64), b: (f64, f64)) -> Result<Self> {
        if ![a.0, a.1, b.0, b.1].iter().all(|v| v.is_finite()) {
            return Err(Error::InvalidSegment(format!("segment {id} has non-finite endpoints")));
        }
        if a.1 == b.1 {
            return Err(Error::InvalidSegment(format!(
                "segment {id} is horizontal (both endpoints on row {})",
                a.1
            )));
        }
        let (top, bottom) = if a.1 < b.1 { (a, b) } else { (b, a) };
        Ok(Self {
            id,
            top,
            bottom,
            top_n: camera.normalize(top),
            bottom_n: camera.normalize(bottom),
            length_px: (top.0 - bottom.0).hypot(top.1 - bottom.1),
        })
    }

    /// `(row_top, row_bottom)`.
    #[inline]
    pub fn rows(&self) -> (f64, f64) {
        (self.top.1, self.bottom.1)
    }

    /// Normalized x of the segment midpoint.
    #[inline]
    pub fn mid_x(&self) -> f64 {
        0.5 * (self.top_n.x + self.bottom_n.x)
    }

    /// Raw algebraic verticality error `|(u x v)^T e_y|` of the uncompensated
    /// normalized endpoints.
    pub fn algebraic_error(&self) -> f64 {
        (self.bottom_n.x - self.top_n.x).abs()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cam() -> CameraModel {
        CameraModel::centered(816.0, 640, 380, 0.0).unwrap()
    }

    #[test]
    fn endpoints_are_canonically_ordered() {
        let s = SegmentRs::new(&cam(), 3, (100.0, 300.0), (110.0, 20.0)).unwrap();
        assert_eq!(s.top, (110.0, 20.0));
        assert_eq!(s.bottom, (100.0, 300.0));
        assert!(s.rows().0 < s.rows().1);
        assert_eq!(s.id, 3);
    }

    #[test]
    fn length_is_pixel_distance() {
        let s = SegmentRs::new(&cam(), 0, (0.0, 0.0), (3.0, 4.0)).unwrap();
        assert_eq!(s.length_px, 5.0);
    }

    #[test]
    fn horizontal_segment_is_rejected() {
        assert!(SegmentRs::new(&cam(), 0, (0.0, 5.0), (30.0, 5.0)).is_err());
        assert!(SegmentRs::new(&cam(), 0, (f64::NAN, 5.0), (30.0, 6.0)).is_err());
    }
}
