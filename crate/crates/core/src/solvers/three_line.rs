use nalgebra::{Matrix2, Vector2};

use crate::error::{Error, Result};
use crate::model::RsModel;
use crate::segment::{PlaneSide, SegmentRs};

use super::constraint::{linear_constraint, solve_lambda};
use super::{PlausibilityBounds, SolverCandidate, OBSERVABILITY_THRESHOLD};

/// Translation part of a pure-translation sample.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TranslationSolution {
    /// `beta_row` for a left pair, `lambda * beta_row` for a right pair.
    pub scaled_beta: f64,
    /// `None` when the translation vanishes.
    pub delta: Option<f64>,
}

/// Solves the 2x2 linear system of two segments on `side` with no rotation.
///
/// Each segment contributes
/// `(r_u u^2 - r_v v^2) b - (r_u u - r_v v) b delta = (v - u) / kappa`
/// with `kappa = 1` on the left plane and `-lambda` on the right one, where
/// `b = beta_row` (left) or `lambda * beta_row` (right).
pub fn three_line_motion(pair: [&SegmentRs; 2], side: PlaneSide) -> Result<TranslationSolution> {
    let sign = match side {
        PlaneSide::Left => 1.0,
        PlaneSide::Right => -1.0,
    };
    let mut m = Matrix2::zeros();
    let mut rhs = Vector2::zeros();
    for (i, s) in pair.iter().enumerate() {
        let (u, v) = (s.top_n.x, s.bottom_n.x);
        let (ru, rv) = s.rows();
        m[(i, 0)] = ru * u * u - rv * v * v;
        m[(i, 1)] = -(ru * u - rv * v);
        rhs[i] = sign * (v - u);
    }
    let det = m.determinant();
    let scale = m.row(0).norm() * m.row(1).norm();
    if !(det.abs() > 1e-12 * scale) {
        return Err(Error::DegenerateSample("singular pure-translation system".into()));
    }
    let inv = m.try_inverse().ok_or_else(|| {
        Error::DegenerateSample("singular pure-translation system".into())
    })?;
    let sol = inv * rhs;
    let (b, g) = (sol[0], sol[1]);
    if b.abs() < OBSERVABILITY_THRESHOLD {
        return Ok(TranslationSolution {
            scaled_beta: 0.0,
            delta: None,
        });
    }
    Ok(TranslationSolution {
        scaled_beta: b,
        delta: Some(g / b),
    })
}

/// Pure-translation models from two segments on `side` and one on the other
/// plane. Returns at most one candidate.
pub fn solve_3la(
    same_plane: [&SegmentRs; 2],
    other: &SegmentRs,
    side: PlaneSide,
    bounds: &PlausibilityBounds,
) -> Result<Vec<SolverCandidate>> {
    let t = three_line_motion(same_plane, side)?;
    let unobservable = |beta: f64| SolverCandidate {
        model: RsModel::new(0.0, beta, 0.0, 0.0),
        real_roots_count: 1,
        conditioning: 0.0,
        depth_observable: false,
    };
    let Some(delta) = t.delta else {
        return Ok(vec![unobservable(0.0)]);
    };
    let (beta, lambda) = match side {
        PlaneSide::Left => {
            let Ok(sol) = solve_lambda(0.0, t.scaled_beta, delta, other) else {
                return Ok(Vec::new());
            };
            (t.scaled_beta, sol.lambda)
        }
        PlaneSide::Right => {
            // Left-side endpoints depend on beta, right-side ones on the known
            // product lambda * beta.
            let mu = t.scaled_beta;
            let terms = |x: f64| {
                if x < delta {
                    (0.0, delta - x)
                } else {
                    (mu * (x - delta), 0.0)
                }
            };
            let (k0, k1) = linear_constraint(other, 0.0, terms(other.top_n.x), terms(other.bottom_n.x));
            if !(k1.abs() > 1e-14 * k0.abs()) {
                return Ok(Vec::new());
            }
            let beta = -k0 / k1;
            if beta.abs() < OBSERVABILITY_THRESHOLD {
                return Ok(Vec::new());
            }
            (beta, mu / beta)
        }
    };
    let model = RsModel::new(0.0, beta, delta, lambda);
    let candidate = SolverCandidate {
        model,
        real_roots_count: 1,
        conditioning: 0.0,
        depth_observable: true,
    };
    Ok(if super::plausibility_filter(&model, bounds) {
        vec![candidate]
    } else {
        Vec::new()
    })
}
