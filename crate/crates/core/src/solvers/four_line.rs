//! Three left-plane segments and one right-plane segment.
//!
//! The left constraints are linear in `(1, beta, beta * delta)` with
//! coefficients depending on `alpha` only, so a common solution requires
//! `det M(alpha) = 0`, a univariate polynomial of degree 8. Its real roots give
//! `alpha`; the null vector of `M` gives `beta` and `delta`; the right segment
//! then fixes `lambda`.

use nalgebra::{Matrix3, Vector3};

use crate::error::{Error, Result};
use crate::model::RsModel;
use crate::poly::Poly;
use crate::segment::{PlaneSide, SegmentRs};

use super::constraint::{solve_lambda, SegmentConstraint};
use super::{PlausibilityBounds, SolverCandidate, OBSERVABILITY_THRESHOLD};

/// Most candidates kept before the inverse-depth step.
pub const MAX_MOTION_CANDIDATES: usize = 3;

const IMAG_TOL: f64 = 1e-8;
const MERGE_TOL: f64 = 1e-10;

/// Root of the left subsystem in scaled units.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MotionRoot {
    pub alpha_hat: f64,
    pub beta_hat: f64,
    /// `beta_hat * delta`
    pub gamma_hat: f64,
    /// Largest left residual relative to the constraint magnitudes.
    pub residual: f64,
}

/// The left-plane subsystem of a 4-line sample.
#[derive(Debug, Clone)]
pub struct LeftSystem {
    pub constraints: [SegmentConstraint; 3],
    pub row_scale: f64,
}

impl LeftSystem {
    pub fn new(left: [&SegmentRs; 3], row_scale: f64) -> Self {
        Self {
            constraints: left.map(|s| SegmentConstraint::new(s, PlaneSide::Left, row_scale)),
            row_scale,
        }
    }

    fn entries(&self) -> [[Poly; 3]; 3] {
        self.constraints
            .each_ref()
            .map(|c| [c.a.clone(), c.p.clone(), -&c.q])
    }

    /// `det M(alpha_hat)`.
    pub fn determinant(&self) -> Poly {
        let m = self.entries();
        let minor = |r1: usize, r2: usize, c1: usize, c2: usize| {
            &(&m[r1][c1] * &m[r2][c2]) - &(&m[r1][c2] * &m[r2][c1])
        };
        let t0 = &m[0][0] * &minor(1, 2, 1, 2);
        let t1 = &m[0][1] * &minor(1, 2, 0, 2);
        let t2 = &m[0][2] * &minor(1, 2, 0, 1);
        &(&t0 - &t1) + &t2
    }

    fn matrix(&self, ah: f64) -> Matrix3<f64> {
        let mut out = Matrix3::zeros();
        for (i, c) in self.constraints.iter().enumerate() {
            out[(i, 0)] = c.a.eval(ah);
            out[(i, 1)] = c.p.eval(ah);
            out[(i, 2)] = -c.q.eval(ah);
        }
        out
    }

    fn residual(&self, ah: f64, bh: f64, gh: f64) -> f64 {
        self.constraints
            .iter()
            .map(|c| c.eval_left_scaled(ah, bh, gh).abs() / c.magnitude().max(f64::MIN_POSITIVE))
            .fold(0.0, f64::max)
    }

    /// Null vector of `M(ah)` normalized so its first entry is 1.
    fn null_vector(&self, ah: f64) -> Option<(f64, f64)> {
        let m = self.matrix(ah);
        let rows = [m.row(0).transpose(), m.row(1).transpose(), m.row(2).transpose()];
        let n = [
            rows[0].cross(&rows[1]),
            rows[0].cross(&rows[2]),
            rows[1].cross(&rows[2]),
        ]
        .into_iter()
        .max_by(|a, b| a.norm().total_cmp(&b.norm()))?;
        let norm = n.norm();
        if norm == 0.0 || n[0].abs() <= 1e-12 * norm {
            return None;
        }
        Some((n[1] / n[0], n[2] / n[0]))
    }

    /// Newton steps on the three left equations in `(ah, bh, gh)`, kept only
    /// while they reduce the residual.
    fn refine(&self, mut x: Vector3<f64>) -> (Vector3<f64>, f64) {
        let mut best = self.residual(x[0], x[1], x[2]);
        for _ in 0..6 {
            if best == 0.0 {
                break;
            }
            let mut jac = Matrix3::zeros();
            let mut f = Vector3::zeros();
            for (i, c) in self.constraints.iter().enumerate() {
                let (p, dp) = c.p.eval_with_derivative(x[0]);
                let (q, dq) = c.q.eval_with_derivative(x[0]);
                let (a, da) = c.a.eval_with_derivative(x[0]);
                f[i] = a + x[1] * p - x[2] * q;
                jac[(i, 0)] = da + x[1] * dp - x[2] * dq;
                jac[(i, 1)] = p;
                jac[(i, 2)] = -q;
            }
            let Some(step) = jac.lu().solve(&f) else { break };
            let next = x - step;
            let r = self.residual(next[0], next[1], next[2]);
            if !(r < best) {
                break;
            }
            x = next;
            best = r;
        }
        (x, best)
    }

    /// All real roots of the left subsystem, sorted by residual then by
    /// `|alpha|`, together with the number of real roots of the determinant.
    pub fn motion_roots(&self) -> Result<(Vec<MotionRoot>, usize)> {
        let det = self.determinant();
        let mags: f64 = self.constraints.iter().map(|c| c.magnitude()).product();
        if !(det.max_abs_coeff() > 1e-10 * mags) {
            return Err(Error::DegenerateSample(
                "left segments do not constrain the motion".into(),
            ));
        }
        let alphas = det.real_roots(IMAG_TOL, MERGE_TOL);
        let count = alphas.len();
        let mut out: Vec<MotionRoot> = alphas
            .into_iter()
            .filter_map(|ah| {
                let (bh, gh) = self.null_vector(ah)?;
                let (x, residual) = self.refine(Vector3::new(ah, bh, gh));
                x.iter().all(|v| v.is_finite()).then_some(MotionRoot {
                    alpha_hat: x[0],
                    beta_hat: x[1],
                    gamma_hat: x[2],
                    residual,
                })
            })
            .collect();
        out.sort_by(|a, b| {
            a.residual
                .total_cmp(&b.residual)
                .then(a.alpha_hat.abs().total_cmp(&b.alpha_hat.abs()))
        });
        Ok((out, count))
    }
}

/// Largest absolute row of the sample, at least 1.
pub(crate) fn row_scale(segs: &[&SegmentRs]) -> f64 {
    segs.iter()
        .flat_map(|s| {
            let (a, b) = s.rows();
            [a.abs(), b.abs()]
        })
        .fold(1.0, f64::max)
}

/// Per-row `(alpha, beta, delta)` for a motion root, or `None` for `delta` when
/// the translation is too small to observe it.
fn unscale(root: &MotionRoot, s: f64) -> (f64, f64, Option<f64>) {
    let alpha = root.alpha_hat / s;
    let beta = root.beta_hat / s;
    let delta = (beta.abs() >= OBSERVABILITY_THRESHOLD).then(|| root.gamma_hat / root.beta_hat);
    (alpha, beta, delta)
}

/// Plausible models for three left segments and one right segment.
///
/// At most [`MAX_MOTION_CANDIDATES`] motion roots survive to the inverse-depth
/// step; each yields at most one candidate.
pub fn solve_4la(
    left: [&SegmentRs; 3],
    right: &SegmentRs,
    bounds: &PlausibilityBounds,
) -> Result<Vec<SolverCandidate>> {
    let s = row_scale(&[left[0], left[1], left[2], right]);
    let system = LeftSystem::new(left, s);
    let (roots, count) = system.motion_roots()?;
    let mut out = Vec::new();
    for root in roots
        .iter()
        .filter(|r| {
            let (alpha, beta, delta) = unscale(r, s);
            bounds.motion_ok(alpha, beta) && delta.is_none_or(|d| bounds.delta_ok(d))
        })
        .take(MAX_MOTION_CANDIDATES)
    {
        let (alpha, beta, delta) = unscale(root, s);
        let candidate = match delta {
            None => SolverCandidate {
                model: RsModel::new(alpha, beta, 0.0, 0.0),
                real_roots_count: count,
                conditioning: root.residual,
                depth_observable: false,
            },
            Some(delta) => {
                let Ok(sol) = solve_lambda(alpha, beta, delta, right) else {
                    continue;
                };
                if sol.lambda < 0.0 {
                    continue;
                }
                SolverCandidate {
                    model: RsModel::new(alpha, beta, delta, sol.lambda),
                    real_roots_count: count,
                    conditioning: root.residual,
                    depth_observable: true,
                }
            }
        };
        out.push(candidate);
    }
    Ok(out)
}
