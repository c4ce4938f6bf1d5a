use crate::model::RsModel;
use crate::poly::quadratic_roots_by_magnitude;
use crate::segment::SegmentRs;

use super::{PlausibilityBounds, SolverCandidate};

/// Per-row yaw candidates of a segment under pure rotation, sorted by
/// absolute value.
///
/// With no translation the constraint reduces to the quadratic
/// `4 r_u r_v (u - v) a^2 + 2 (r_u - r_v)(1 + u v) a + (u - v) = 0`.
pub fn solve_1la(seg: &SegmentRs) -> Vec<f64> {
    let (xu, xv) = (seg.top_n.x, seg.bottom_n.x);
    let (ru, rv) = seg.rows();
    quadratic_roots_by_magnitude(
        4.0 * ru * rv * (xu - xv),
        2.0 * (ru - rv) * (1.0 + xu * xv),
        xu - xv,
    )
}

/// Plausible pure-rotation models from one segment. Only the least-magnitude
/// root is kept.
pub fn one_line_candidates(seg: &SegmentRs, bounds: &PlausibilityBounds) -> Vec<SolverCandidate> {
    let roots = solve_1la(seg);
    let count = roots.len();
    roots
        .first()
        .filter(|a| bounds.motion_ok(**a, 0.0))
        .map(|&alpha| SolverCandidate {
            model: RsModel::new(alpha, 0.0, 0.0, 0.0),
            real_roots_count: count,
            conditioning: 0.0,
            depth_observable: false,
        })
        .into_iter()
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::camera::CameraModel;

    fn cam() -> CameraModel {
        CameraModel::centered(816.0, 640, 380, 0.0).unwrap()
    }

    #[test]
    fn vertical_segment_gives_zero_first() {
        let s = SegmentRs::new(&cam(), 0, (200.0, 10.0), (200.0, 300.0)).unwrap();
        let roots = solve_1la(&s);
        assert_eq!(roots[0], 0.0);
    }

    #[test]
    fn at_most_two_roots() {
        let s = SegmentRs::new(&cam(), 0, (200.0, 10.0), (203.0, 300.0)).unwrap();
        assert!(solve_1la(&s).len() <= 2);
    }
}
