//! Brute-force reference solver used to certify the minimal solvers.
//!
//! Residuals are computed through the compensation map rather than from the
//! polynomial coefficients, so the two paths share no algebra. The map's
//! third coordinate is exactly 1, which makes every right-wall residual affine
//! in `lambda`; `lambda` is therefore profiled out by linear least squares and
//! the search runs over `(alpha, beta, delta)` only.

use nalgebra::{DMatrix, DVector, Matrix3, Vector3};

use crate::model::RsModel;
use crate::motion::compensate_with_inverse_depth;
use crate::segment::{PlaneSide, SegmentRs};

use super::PlausibilityBounds;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OracleConfig {
    /// Search box for `(alpha, beta, delta)`; all ranges must be finite.
    pub bounds: PlausibilityBounds,
    /// Grid points per axis for `(alpha, beta, delta)`.
    pub grid: [usize; 3],
    /// Number of grid points refined locally.
    pub starts: usize,
    pub max_iterations: usize,
}

impl OracleConfig {
    pub fn new(bounds: PlausibilityBounds) -> Self {
        Self {
            bounds,
            grid: [21, 21, 21],
            starts: 60,
            max_iterations: 1000,
        }
    }
}

/// A refined local minimum and its cost.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OracleMinimum {
    pub model: RsModel,
    pub cost: f64,
}

struct Problem<'a> {
    segments: &'a [(SegmentRs, PlaneSide)],
    row_scale: f64,
}

impl<'a> Problem<'a> {
    fn new(segments: &'a [(SegmentRs, PlaneSide)]) -> Self {
        let row_scale = segments
            .iter()
            .flat_map(|(s, _)| [s.top.1.abs(), s.bottom.1.abs()])
            .fold(1.0, f64::max);
        Self { segments, row_scale }
    }

    fn residual(seg: &SegmentRs, side: PlaneSide, m: &RsModel) -> Option<f64> {
        let sigma = |x: f64| match side {
            PlaneSide::Left => m.delta() - x,
            PlaneSide::Right => m.lambda() * (x - m.delta()),
        };
        let (ru, rv) = seg.rows();
        let u = compensate_with_inverse_depth(seg.top_n, ru, m.alpha(), m.beta(), sigma(seg.top_n.x))
            .ok()?;
        let v = compensate_with_inverse_depth(
            seg.bottom_n,
            rv,
            m.alpha(),
            m.beta(),
            sigma(seg.bottom_n.x),
        )
        .ok()?;
        let du = 1.0 - 2.0 * seg.top_n.x * m.alpha() * ru;
        let dv = 1.0 - 2.0 * seg.bottom_n.x * m.alpha() * rv;
        Some((u.x / u.z - v.x / v.z) * du * dv)
    }

    /// Model at scaled parameters `t` with the best-fitting `lambda`.
    fn model(&self, t: &Vector3<f64>) -> Option<RsModel> {
        let at = |lambda| RsModel::new(t[0] / self.row_scale, t[1] / self.row_scale, t[2], lambda);
        let (m0, m1) = (at(0.0), at(1.0));
        let (mut num, mut den) = (0.0, 0.0);
        for (s, side) in self.segments {
            if *side == PlaneSide::Right {
                let r0 = Self::residual(s, *side, &m0)?;
                let slope = Self::residual(s, *side, &m1)? - r0;
                num -= r0 * slope;
                den += slope * slope;
            }
        }
        Some(at(if den > 0.0 { num / den } else { 0.0 }))
    }

    fn residuals(&self, t: &Vector3<f64>) -> Option<DVector<f64>> {
        let m = self.model(t)?;
        let r: Option<Vec<f64>> = self
            .segments
            .iter()
            .map(|(s, side)| Self::residual(s, *side, &m))
            .collect();
        r.map(DVector::from_vec)
    }

    fn cost(&self, t: &Vector3<f64>) -> f64 {
        self.residuals(t).map_or(f64::INFINITY, |r| r.norm_squared())
    }

    fn jacobian(&self, t: &Vector3<f64>, steps: &Vector3<f64>) -> Option<DMatrix<f64>> {
        let mut j = DMatrix::zeros(self.segments.len(), 3);
        for k in 0..3 {
            let h = steps[k];
            let mut tp = *t;
            let mut tm = *t;
            tp[k] += h;
            tm[k] -= h;
            let d = (self.residuals(&tp)? - self.residuals(&tm)?) / (2.0 * h);
            j.set_column(k, &d);
        }
        Some(j)
    }

    fn normal_equations(&self, t: &Vector3<f64>, r: &DVector<f64>, steps: &Vector3<f64>) -> Option<(Matrix3<f64>, Vector3<f64>)> {
        let j = self.jacobian(t, steps)?;
        let jtj = (j.transpose() * &j).fixed_view::<3, 3>(0, 0).into_owned();
        let g = (j.transpose() * r).fixed_rows::<3>(0).into_owned();
        Some((jtj, g))
    }

    fn refine(&self, start: Vector3<f64>, steps: &Vector3<f64>, max_iter: usize) -> (Vector3<f64>, f64) {
        let mut t = start;
        let Some(mut r) = self.residuals(&t) else {
            return (t, f64::INFINITY);
        };
        let mut cost = r.norm_squared();
        let mut mu = -1.0;
        for _ in 0..max_iter {
            if cost == 0.0 {
                break;
            }
            let Some((jtj, g)) = self.normal_equations(&t, &r, steps) else { break };
            if mu < 0.0 {
                mu = 1e-3 * jtj.diagonal().max().max(f64::MIN_POSITIVE);
            }
            let mut improved = false;
            for _ in 0..30 {
                let mut a = jtj;
                for k in 0..3 {
                    a[(k, k)] += mu * jtj[(k, k)].max(1e-12);
                }
                let Some(step) = a.lu().solve(&(-g)) else {
                    mu *= 4.0;
                    continue;
                };
                let next = t + step;
                if let Some(rn) = self.residuals(&next) {
                    let cn = rn.norm_squared();
                    if cn < cost {
                        let small = step.abs().iter().zip(t.iter()).all(|(s, v)| *s <= 1e-15 * v.abs().max(1e-3));
                        t = next;
                        r = rn;
                        cost = cn;
                        mu = (mu / 3.0).max(1e-20);
                        improved = !small;
                        break;
                    }
                }
                mu *= 4.0;
            }
            if !improved {
                break;
            }
        }
        self.polish(t, r, cost, steps)
    }

    /// Undamped Gauss-Newton with backtracking; finishes the slow crawl of
    /// the damped loop along narrow valleys.
    fn polish(&self, mut t: Vector3<f64>, mut r: DVector<f64>, mut cost: f64, steps: &Vector3<f64>) -> (Vector3<f64>, f64) {
        for _ in 0..50 {
            if cost == 0.0 {
                break;
            }
            let Some((jtj, g)) = self.normal_equations(&t, &r, steps) else { break };
            let Some(mut step) = jtj.lu().solve(&(-g)) else { break };
            let mut improved = false;
            for _ in 0..20 {
                if let Some(rn) = self.residuals(&(t + step)) {
                    let cn = rn.norm_squared();
                    if cn < cost {
                        t += step;
                        r = rn;
                        cost = cn;
                        improved = true;
                        break;
                    }
                }
                step *= 0.5;
            }
            if !improved {
                break;
            }
        }
        (t, cost)
    }

    fn minimum(&self, t: Vector3<f64>, steps: &Vector3<f64>, max_iter: usize) -> Option<OracleMinimum> {
        let (t, cost) = self.refine(t, steps, max_iter);
        Some(OracleMinimum {
            model: self.model(&t)?,
            cost,
        })
    }
}

fn search_box(cfg: &OracleConfig, row_scale: f64) -> (Vector3<f64>, Vector3<f64>) {
    let b = &cfg.bounds;
    (
        Vector3::new(-b.alpha_max * row_scale, -b.beta_max * row_scale, b.delta_min),
        Vector3::new(b.alpha_max * row_scale, b.beta_max * row_scale, b.delta_max),
    )
}

fn finite_difference_steps(lo: &Vector3<f64>, hi: &Vector3<f64>) -> Vector3<f64> {
    (hi - lo).map(|w| (1e-6 * w).max(1e-12))
}

fn axis(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n <= 1 {
        return vec![0.5 * (lo + hi)];
    }
    (0..n)
        .map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64)
        .collect()
}

/// Refined minima from grid starts, sorted by cost. Grid points no worse than
/// any of their neighbors are refined first so that the starts spread over
/// distinct basins; the remaining budget goes to the lowest other points.
pub fn oracle_minima(segments: &[(SegmentRs, PlaneSide)], cfg: &OracleConfig) -> Vec<OracleMinimum> {
    let problem = Problem::new(segments);
    let (lo, hi) = search_box(cfg, problem.row_scale);
    let n = cfg.grid.map(|g| g.max(1));
    let axes: Vec<Vec<f64>> = (0..3).map(|k| axis(lo[k], hi[k], n[k])).collect();

    let mut points = Vec::with_capacity(n.iter().product());
    for &a in &axes[0] {
        for &bt in &axes[1] {
            for &d in &axes[2] {
                points.push(Vector3::new(a, bt, d));
            }
        }
    }
    let costs: Vec<f64> = points.iter().map(|t| problem.cost(t)).collect();
    let index = |i: [usize; 3]| (i[0] * n[1] + i[1]) * n[2] + i[2];
    let is_local_min = |k: usize| {
        let i = [k / (n[1] * n[2]), (k / n[2]) % n[1], k % n[2]];
        (0..27).filter(|&o| o != 13).all(|o| {
            let mut j = i;
            let mut o = o;
            for d in 0..3 {
                let step = o % 3;
                o /= 3;
                match (step, j[d]) {
                    (0, 0) => return true,
                    (0, _) => j[d] -= 1,
                    (2, x) if x + 1 == n[d] => return true,
                    (2, _) => j[d] += 1,
                    _ => {}
                }
            }
            costs[k] <= costs[index(j)]
        })
    };
    let mut order: Vec<(bool, f64, usize)> = (0..costs.len()).map(|k| (!is_local_min(k), costs[k], k)).collect();
    order.sort_by(|x, y| x.0.cmp(&y.0).then(x.1.total_cmp(&y.1)).then(x.2.cmp(&y.2)));

    let steps = finite_difference_steps(&lo, &hi);
    let mut out: Vec<OracleMinimum> = order
        .iter()
        .take(cfg.starts.max(1))
        .filter_map(|&(_, _, k)| problem.minimum(points[k], &steps, cfg.max_iterations))
        .collect();
    out.sort_by(|x, y| x.cost.total_cmp(&y.cost));
    out
}

/// Best local minimum of the summed squared cleared residuals.
pub fn oracle_solve(segments: &[(SegmentRs, PlaneSide)], cfg: &OracleConfig) -> RsModel {
    oracle_minima(segments, cfg)
        .first()
        .map(|m| m.model)
        .unwrap_or_else(RsModel::zero)
}

/// Local refinement from the motion and `delta` of a given model; `lambda` is
/// re-fitted, so the start value is not used.
pub fn oracle_refine(
    segments: &[(SegmentRs, PlaneSide)],
    start: &RsModel,
    cfg: &OracleConfig,
) -> OracleMinimum {
    let problem = Problem::new(segments);
    let (lo, hi) = search_box(cfg, problem.row_scale);
    let t0 = Vector3::new(
        start.alpha() * problem.row_scale,
        start.beta() * problem.row_scale,
        start.delta(),
    );
    problem
        .minimum(t0, &finite_difference_steps(&lo, &hi), cfg.max_iterations)
        .unwrap_or(OracleMinimum {
            model: *start,
            cost: f64::INFINITY,
        })
}

/// Summed squared cleared residuals at a model.
pub fn oracle_cost(segments: &[(SegmentRs, PlaneSide)], model: &RsModel) -> f64 {
    segments
        .iter()
        .map(|(s, side)| Problem::residual(s, *side, model).map_or(f64::INFINITY, |r| r * r))
        .sum()
}
