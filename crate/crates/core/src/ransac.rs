//! Segment pruning and the RANSAC loop around the minimal solvers.
//!
//! Minimal samples are drawn from a seeded generator in batches, solved in
//! parallel and merged in iteration order, so the result depends only on the
//! inputs and the seed.

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::camera::CameraModel;
use crate::error::{Error, Result};
use crate::model::RsModel;
use crate::motion::vertical_residual_px;
use crate::segment::{PlaneSide, SegmentRs};
use crate::solvers::{
    one_line_candidates, solve_3la, solve_4la, PlausibilityBounds,
    SolverCandidate, SolverKind,
};

const BATCH: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RansacConfig {
    pub inlier_threshold_px: f64,
    pub confidence: f64,
    pub max_iterations: usize,
    /// Iterations run even when the adaptive bound is lower.
    pub min_iterations: usize,
    pub min_segment_len_px: f64,
    /// Largest raw `|u_1 - v_1|` (normalized units) kept by pruning.
    pub prefilter_algebraic: f64,
    pub bounds: PlausibilityBounds,
    pub rng_seed: u64,
}

impl RansacConfig {
    pub fn new(bounds: PlausibilityBounds) -> Self {
        Self {
            inlier_threshold_px: 0.5,
            confidence: 0.99,
            max_iterations: 10_000,
            min_iterations: 0,
            min_segment_len_px: 35.0,
            prefilter_algebraic: 0.5,
            bounds,
            rng_seed: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidConfig(m.to_string()));
        if !(self.confidence > 0.0 && self.confidence < 1.0) {
            return bad("confidence must lie in (0, 1)");
        }
        if !(self.inlier_threshold_px > 0.0 && self.prefilter_algebraic > 0.0) {
            return bad("thresholds must be positive");
        }
        if !(self.min_segment_len_px >= 0.0) {
            return bad("minimum segment length must be non-negative");
        }
        if self.max_iterations == 0 {
            return bad("at least one iteration is required");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimateResult {
    pub model: RsModel,
    pub depth_observable: bool,
    pub inlier_mask: Vec<bool>,
    pub iterations_run: usize,
    pub best_inlier_count: usize,
    /// Per-segment residual in pixels; infinite where compensation fails.
    pub residuals: Vec<f64>,
    /// Iteration at which the returned model was found.
    pub best_iteration: usize,
    pub rejected_samples: usize,
    pub solver_failures: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SideLabel {
    Left,
    Right,
    Outlier,
}

/// Drops short segments and segments far from vertical, keeping order and ids.
pub fn prune_segments(segments: &[SegmentRs], cfg: &RansacConfig) -> Vec<SegmentRs> {
    segments
        .iter()
        .filter(|s| s.length_px >= cfg.min_segment_len_px && s.algebraic_error() <= cfg.prefilter_algebraic)
        .copied()
        .collect()
}

/// Iterations needed to draw an all-inlier sample of size `k` with the given
/// confidence when a fraction `w` of the data are inliers.
pub fn adaptive_iterations(w: f64, k: usize, confidence: f64, cap: usize) -> usize {
    if w >= 1.0 {
        return 1;
    }
    let good = w.powi(k as i32);
    if good <= 0.0 {
        return cap;
    }
    let n = (1.0 - confidence).ln() / (1.0 - good).ln();
    if !n.is_finite() {
        return cap;
    }
    (n.ceil().max(1.0) as usize).min(cap)
}

/// Residuals of every segment under a model.
pub fn segment_residuals(segments: &[SegmentRs], model: &RsModel, camera: &CameraModel) -> Vec<f64> {
    segments
        .iter()
        .map(|s| vertical_residual_px(s, model, camera).unwrap_or(f64::INFINITY))
        .collect()
}

/// `(inlier count, summed inlier residual)`.
fn score(segments: &[SegmentRs], model: &RsModel, camera: &CameraModel, threshold: f64) -> (usize, f64) {
    let mut count = 0;
    let mut sum = 0.0;
    for s in segments {
        let r = vertical_residual_px(s, model, camera).unwrap_or(f64::INFINITY);
        if r <= threshold {
            count += 1;
            sum += r;
        }
    }
    (count, sum)
}

/// Side of the line at infinity a segment's midpoint falls on; ties go right.
pub fn side_of(seg: &SegmentRs, delta: f64) -> PlaneSide {
    if seg.mid_x() < delta {
        PlaneSide::Left
    } else {
        PlaneSide::Right
    }
}

/// Labels each segment Left or Right by its midpoint, or Outlier when its
/// residual exceeds the threshold.
pub fn refit_side_assignment(
    model: &RsModel,
    segments: &[SegmentRs],
    camera: &CameraModel,
    threshold_px: f64,
) -> Vec<SideLabel> {
    segments
        .iter()
        .map(|s| {
            let r = vertical_residual_px(s, model, camera).unwrap_or(f64::INFINITY);
            if r > threshold_px {
                SideLabel::Outlier
            } else {
                match side_of(s, model.delta()) {
                    PlaneSide::Left => SideLabel::Left,
                    PlaneSide::Right => SideLabel::Right,
                }
            }
        })
        .collect()
}

/// What one minimal sample produced.
enum Hypotheses {
    /// Sample not usable with the side heuristic.
    Rejected,
    /// The solver reported a degenerate configuration.
    Failed,
    Candidates(Vec<SolverCandidate>),
}

fn solve_sample(
    kind: SolverKind,
    segments: &[SegmentRs],
    indices: &[usize],
    bounds: &PlausibilityBounds,
) -> Hypotheses {
    let mut sample: Vec<&SegmentRs> = indices.iter().map(|&i| &segments[i]).collect();
    sample.sort_by(|a, b| a.mid_x().total_cmp(&b.mid_x()).then(a.id.cmp(&b.id)));
    let result = match kind {
        SolverKind::OneLine => Ok(one_line_candidates(sample[0], bounds)),
        SolverKind::FourLine => {
            if !(sample[2].mid_x() < sample[3].mid_x()) {
                return Hypotheses::Rejected;
            }
            solve_4la([sample[0], sample[1], sample[2]], sample[3], bounds)
        }
        SolverKind::ThreeLine => {
            if !(sample[0].mid_x() < sample[1].mid_x() && sample[1].mid_x() < sample[2].mid_x()) {
                return Hypotheses::Rejected;
            }
            let left = solve_3la([sample[0], sample[1]], sample[2], PlaneSide::Left, bounds);
            let right = solve_3la([sample[1], sample[2]], sample[0], PlaneSide::Right, bounds);
            match (left, right) {
                (Err(e), Err(_)) => Err(e),
                (l, r) => Ok(l.unwrap_or_default().into_iter().chain(r.unwrap_or_default()).collect()),
            }
        }
    };
    match result {
        Ok(c) => Hypotheses::Candidates(c),
        Err(_) => Hypotheses::Failed,
    }
}

#[derive(Debug, Clone, Copy)]
struct Best {
    candidate: SolverCandidate,
    inliers: usize,
    residual_sum: f64,
    iteration: usize,
}

impl Best {
    fn beats(&self, other: &Option<Best>) -> bool {
        match other {
            None => true,
            Some(o) => {
                self.inliers > o.inliers || (self.inliers == o.inliers && self.residual_sum < o.residual_sum)
            }
        }
    }
}

/// Robustly estimates the model from segments with the chosen minimal solver.
pub fn ransac_ackermann(
    segments: &[SegmentRs],
    kind: SolverKind,
    camera: &CameraModel,
    cfg: &RansacConfig,
) -> Result<EstimateResult> {
    cfg.validate()?;
    let n = segments.len();
    let k = kind.sample_size();
    if n < k {
        return Err(Error::InsufficientData {
            available: n,
            required: k,
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.rng_seed);
    let mut best: Option<Best> = None;
    let mut bound = cfg.max_iterations;
    let mut iterations = 0;
    let (mut rejected, mut failures, mut implausible) = (0, 0, 0);
    while iterations < bound {
        let batch: Vec<Vec<usize>> = (0..BATCH.min(bound - iterations))
            .map(|_| sample(&mut rng, n, k).into_vec())
            .collect();
        let results: Vec<(Hypotheses, Vec<(usize, f64)>)> = batch
            .par_iter()
            .map(|idx| {
                let h = solve_sample(kind, segments, idx, &cfg.bounds);
                let scores = match &h {
                    Hypotheses::Candidates(c) => c
                        .iter()
                        .map(|c| score(segments, &c.model, camera, cfg.inlier_threshold_px))
                        .collect(),
                    _ => Vec::new(),
                };
                (h, scores)
            })
            .collect();
        for (h, scores) in results {
            if iterations >= bound {
                break;
            }
            match h {
                Hypotheses::Rejected => rejected += 1,
                Hypotheses::Failed => failures += 1,
                Hypotheses::Candidates(c) => {
                    if c.is_empty() {
                        implausible += 1;
                    }
                    for (cand, (inliers, residual_sum)) in c.into_iter().zip(scores) {
                        let b = Best {
                            candidate: cand,
                            inliers,
                            residual_sum,
                            iteration: iterations,
                        };
                        if b.beats(&best) {
                            best = Some(b);
                            let w = inliers as f64 / n as f64;
                            bound = adaptive_iterations(w, k, cfg.confidence, cfg.max_iterations)
                                .max(cfg.min_iterations)
                                .min(cfg.max_iterations);
                        }
                    }
                }
            }
            iterations += 1;
        }
    }
    let Some(best) = best else {
        return Err(Error::EstimationFailed {
            iterations,
            rejected_samples: rejected,
            solver_failures: failures,
            implausible,
        });
    };
    let model = best.candidate.model;
    let residuals = segment_residuals(segments, &model, camera);
    let inlier_mask: Vec<bool> = residuals.iter().map(|r| *r <= cfg.inlier_threshold_px).collect();
    Ok(EstimateResult {
        model,
        depth_observable: best.candidate.depth_observable,
        best_inlier_count: inlier_mask.iter().filter(|m| **m).count(),
        inlier_mask,
        iterations_run: iterations,
        residuals,
        best_iteration: best.iteration,
        rejected_samples: rejected,
        solver_failures: failures,
    })
}
