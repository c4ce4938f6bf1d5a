use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::camera::NormalizedPoint;
use crate::model::RsModel;
use crate::segment::{PlaneSide, SegmentRs};

use super::project::{project_rs_exact, project_rs_second_order};
use super::{MotionTruth, Scene};

/// Which camera motion model produces the rolling-shutter endpoints.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum RenderMode {
    /// Circular-arc poses and true depth.
    #[default]
    Exact,
    /// The solvers' own forward model; constraints hold up to rounding.
    SecondOrder,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SegmentLabel {
    pub side: PlaneSide,
    pub outlier: bool,
    /// Index into `Scene::lines`.
    pub line: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RenderedSegments {
    pub segments: Vec<SegmentRs>,
    pub labels: Vec<SegmentLabel>,
    /// Zero-motion pixel endpoints of the same 3D points, ordered like
    /// `(segment.top, segment.bottom)`.
    pub gs_endpoints: Vec<[(f64, f64); 2]>,
    /// Solver-unit model equivalent to the motion, with the scene's depth.
    pub truth: RsModel,
    /// Lines rejected for leaving the frame or being too short.
    pub dropped: usize,
    /// Endpoints whose readout row could not be determined.
    pub projection_failures: usize,
}

/// Projects every scene line into the rolling-shutter image and adds
/// isotropic Gaussian pixel noise to the endpoints.
///
/// Segments with an endpoint outside the frame or shorter than the scene's
/// minimum length are dropped. Segment ids are their positions in the output.
pub fn render_segments(
    scene: &Scene,
    motion: &MotionTruth,
    noise_std: f64,
    seed: u64,
    mode: RenderMode,
) -> RenderedSegments {
    let cfg = &scene.config;
    let cam = cfg.camera();
    let truth = motion.rs_model(cfg);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let noise = Normal::new(0.0, noise_std.max(0.0)).expect("finite noise level");
    let mut out = RenderedSegments {
        segments: Vec::new(),
        labels: Vec::new(),
        gs_endpoints: Vec::new(),
        truth,
        dropped: 0,
        projection_failures: 0,
    };
    for (index, line) in scene.lines.iter().enumerate() {
        let jitter: [f64; 4] = std::array::from_fn(|_| {
            if noise_std > 0.0 {
                noise.sample(&mut rng)
            } else {
                0.0
            }
        });
        let project = |p: &nalgebra::Vector3<f64>| match mode {
            RenderMode::Exact => project_rs_exact(p, motion, &cam).map(|e| e.pixel),
            RenderMode::SecondOrder => project_rs_second_order(
                NormalizedPoint::new(p.x / p.z, p.y / p.z),
                line.side,
                &truth,
                &cam,
            ),
        };
        let (Some(a), Some(b)) = (project(&line.top), project(&line.bottom)) else {
            out.projection_failures += 1;
            out.dropped += 1;
            continue;
        };
        let a = (a.0 + jitter[0], a.1 + jitter[1]);
        let b = (b.0 + jitter[2], b.1 + jitter[3]);
        let length = (a.0 - b.0).hypot(a.1 - b.1);
        if !cam.contains(a) || !cam.contains(b) || length < cfg.min_segment_len_px {
            out.dropped += 1;
            continue;
        }
        let Ok(seg) = SegmentRs::new(&cam, out.segments.len(), a, b) else {
            out.dropped += 1;
            continue;
        };
        let gs = |p: &nalgebra::Vector3<f64>| cam.denormalize(NormalizedPoint::new(p.x / p.z, p.y / p.z));
        let (ga, gb) = (gs(&line.top), gs(&line.bottom));
        out.gs_endpoints.push(if seg.top == a { [ga, gb] } else { [gb, ga] });
        out.segments.push(seg);
        out.labels.push(SegmentLabel {
            side: line.side,
            outlier: line.outlier,
            line: index,
        });
    }
    out
}
