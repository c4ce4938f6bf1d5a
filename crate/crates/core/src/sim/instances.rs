use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::model::RsModel;
use crate::segment::{PlaneSide, SegmentRs};
use crate::solvers::{PlausibilityBounds, SolverKind};

use super::{make_scene, render_segments, MotionTruth, RenderMode, SceneConfig};

/// Noise-free minimal sample with its generating model.
#[derive(Debug, Clone, PartialEq)]
pub struct MinimalInstance {
    pub kind: SolverKind,
    /// Segments on the left wall, left to right as sampled.
    pub left: Vec<SegmentRs>,
    pub right: Vec<SegmentRs>,
    pub truth: RsModel,
    pub config: SceneConfig,
}

/// Relative distance between two models, per parameter, with absolute floors
/// so that parameters near zero are compared on a sensible scale.
///
/// The floors are 5% of the motion bounds for `alpha` and `beta` and 0.1 for
/// `delta` and `lambda`.
pub fn relative_error(est: &RsModel, truth: &RsModel, bounds: &PlausibilityBounds) -> f64 {
    let pairs = [
        (est.alpha(), truth.alpha(), 0.05 * bounds.alpha_max),
        (est.beta(), truth.beta(), 0.05 * bounds.beta_max),
        (est.delta(), truth.delta(), 0.1),
        (est.lambda(), truth.lambda(), 0.1),
    ];
    pairs
        .iter()
        .map(|(e, t, floor)| (e - t).abs() / t.abs().max(*floor))
        .fold(0.0, f64::max)
}

/// Draws a random model inside `bounds` (restricted to the solver's motion
/// class), builds the matching scene and renders it with the second-order
/// model. Returns `None` if the scene has too few visible lines on a wall.
///
/// `|beta|` is drawn from 5%..100% of its bound with either sign, `delta` from
/// [-0.25, 0.25] and `lambda` from [0.25, 2.5].
pub fn minimal_instance(kind: SolverKind, seed: u64, bounds: &PlausibilityBounds) -> Option<MinimalInstance> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let sign = |rng: &mut ChaCha8Rng| if rng.random::<bool>() { 1.0 } else { -1.0 };
    let alpha = match kind {
        SolverKind::ThreeLine => 0.0,
        _ => rng.random_range(-1.0..=1.0) * bounds.alpha_max,
    };
    let beta = match kind {
        SolverKind::OneLine => 0.0,
        _ => sign(&mut rng) * rng.random_range(0.05..=1.0) * bounds.beta_max,
    };
    let delta: f64 = rng.random_range(-0.25..=0.25);
    let lambda: f64 = rng.random_range(0.25..=2.5);
    instance_for_model(kind, &RsModel::new(alpha, beta, delta, lambda), rng.random())
}

/// Renders a minimal sample for a given model (`lambda > 0`).
pub fn instance_for_model(kind: SolverKind, truth: &RsModel, seed: u64) -> Option<MinimalInstance> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let base = SceneConfig::default();
    let (alpha, beta, delta, lambda) = (truth.alpha(), truth.beta(), truth.delta(), truth.lambda());
    let gauge = base.left_plane_dist_m;
    let yaw = delta.atan();
    let left_dist = gauge * yaw.cos();
    let config = SceneConfig {
        road_yaw_deg: yaw.to_degrees(),
        left_plane_dist_m: left_dist,
        right_plane_dist_m: left_dist / lambda,
        n_lines: 6,
        ..base
    };
    let motion = MotionTruth::from_rows(alpha, beta, config.row_delay(), config.gauge_length_m());
    let scene = make_scene(&config, rng.random());
    let rendered = render_segments(&scene, &motion, 0.0, 0, RenderMode::SecondOrder);
    let mut left = Vec::new();
    let mut right = Vec::new();
    for (s, l) in rendered.segments.iter().zip(&rendered.labels) {
        match l.side {
            PlaneSide::Left => left.push(*s),
            PlaneSide::Right => right.push(*s),
        }
    }
    left.shuffle(&mut rng);
    right.shuffle(&mut rng);
    let (nl, nr) = match kind {
        SolverKind::FourLine => (3, 1),
        SolverKind::ThreeLine => (2, 1),
        SolverKind::OneLine => (1, 0),
    };
    if left.len() < nl || right.len() < nr {
        return None;
    }
    left.truncate(nl);
    right.truncate(nr);
    Some(MinimalInstance {
        kind,
        left,
        right,
        truth: rendered.truth,
        config,
    })
}
