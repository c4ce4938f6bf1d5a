//! Verticality constraint of one segment as a polynomial in the unknowns.
//!
//! For a segment with normalized endpoints `u`, `v` read out at rows `r_u`,
//! `r_v`, clearing the compensation denominators from `U_1 = V_1` gives
//!
//! ```text
//! f = A(alpha) + kappa * beta * (P(alpha) - delta * Q(alpha))
//! ```
//!
//! with `kappa = 1` on the left plane and `kappa = -lambda` on the right one.
//! `A` is quadratic and `P`, `Q` are cubic in `alpha`.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::model::RsModel;
use crate::poly::{quadratic_roots_by_magnitude, Poly};
use crate::segment::{PlaneSide, SegmentRs};

/// Exponents of `(alpha, beta, delta, lambda)`.
pub type Exponents = [u8; 4];

/// Polynomial verticality constraint for one segment.
///
/// Coefficients are stored in a scaled variable `alpha_hat = alpha * row_scale`
/// (rows divided by `row_scale`) so that they stay within a few orders of
/// magnitude of each other; `row_scale = 1` gives per-row units.
#[derive(Debug, Clone, PartialEq)]
pub struct SegmentConstraint {
    pub source: usize,
    pub side: PlaneSide,
    pub row_scale: f64,
    pub a: Poly,
    pub p: Poly,
    pub q: Poly,
}

/// `x + a + 2 x a^2` multiplied by the row, as a polynomial in scaled alpha.
fn h_times_row(x: f64, rho: f64) -> Poly {
    Poly::new(vec![rho * x, rho * rho, 2.0 * x * rho * rho * rho])
}

fn denominator(x: f64, rho: f64) -> Poly {
    Poly::new(vec![1.0, -2.0 * x * rho])
}

impl SegmentConstraint {
    pub fn new(seg: &SegmentRs, side: PlaneSide, row_scale: f64) -> Self {
        let (xu, xv) = (seg.top_n.x, seg.bottom_n.x);
        let (ru, rv) = seg.rows();
        let (pu, pv) = (ru / row_scale, rv / row_scale);
        let a = Poly::new(vec![
            xu - xv,
            2.0 * (pu - pv) * (1.0 + xu * xv),
            4.0 * pu * pv * (xu - xv),
        ]);
        let (hu, hv) = (h_times_row(xu, pu), h_times_row(xv, pv));
        let (du, dv) = (denominator(xu, pu), denominator(xv, pv));
        let hu_dv = &hu * &dv;
        let hv_du = &hv * &du;
        let p = &hu_dv.scale(xu) - &hv_du.scale(xv);
        let q = &hu_dv - &hv_du;
        Self {
            source: seg.id,
            side,
            row_scale,
            a,
            p,
            q,
        }
    }

    /// Constraint in per-row units (`row_scale = 1`).
    pub fn unscaled(seg: &SegmentRs, side: PlaneSide) -> Self {
        Self::new(seg, side, 1.0)
    }

    /// Value at per-row parameters.
    pub fn evaluate(&self, model: &RsModel) -> f64 {
        let s = self.row_scale;
        let (ah, bh) = (model.alpha() * s, model.beta() * s);
        let kappa = match self.side {
            PlaneSide::Left => 1.0,
            PlaneSide::Right => -model.lambda(),
        };
        self.a.eval(ah) + kappa * bh * (self.p.eval(ah) - model.delta() * self.q.eval(ah))
    }

    /// Value at scaled motion parameters with `gamma_hat = beta_hat * delta`,
    /// for the left plane (`kappa = 1`).
    #[inline]
    pub(crate) fn eval_left_scaled(&self, ah: f64, bh: f64, gh: f64) -> f64 {
        self.a.eval(ah) + bh * self.p.eval(ah) - gh * self.q.eval(ah)
    }

    /// Coefficients by monomial in per-row units. Zero coefficients are kept so
    /// the support does not depend on the data.
    pub fn monomials(&self) -> BTreeMap<Exponents, f64> {
        let s = self.row_scale;
        let lam: u8 = match self.side {
            PlaneSide::Left => 0,
            PlaneSide::Right => 1,
        };
        let kappa = match self.side {
            PlaneSide::Left => 1.0,
            PlaneSide::Right => -1.0,
        };
        let mut out = BTreeMap::new();
        for k in 0..=2usize {
            out.insert([k as u8, 0, 0, 0], self.a.coeff(k) * s.powi(k as i32));
        }
        for k in 0..=3usize {
            let unscale = s.powi(k as i32 + 1);
            out.insert([k as u8, 1, 0, lam], kappa * self.p.coeff(k) * unscale);
            out.insert([k as u8, 1, 1, lam], -kappa * self.q.coeff(k) * unscale);
        }
        out
    }

    /// Largest absolute coefficient, used to judge degeneracy.
    pub fn magnitude(&self) -> f64 {
        self.a
            .max_abs_coeff()
            .max(self.p.max_abs_coeff())
            .max(self.q.max_abs_coeff())
    }
}

/// Builds the constraint for a segment assigned to `side`, in per-row units.
pub fn build_constraint(seg: &SegmentRs, side: PlaneSide) -> SegmentConstraint {
    SegmentConstraint::unscaled(seg, side)
}

/// Numerator of the compensated x coordinate when the product `beta_row *
/// inverse depth` is `c0 + c1 * t` in an unknown `t`. Returned as the
/// coefficients of `t^0` and `t^1`, together with the denominator.
fn numerator_terms(x: f64, row: f64, alpha: f64, c0: f64, c1: f64) -> (f64, f64, f64) {
    let a = alpha * row;
    let h = x + a + 2.0 * x * a * a;
    (x + 2.0 * a - row * c0 * h, -row * c1 * h, 1.0 - 2.0 * x * a)
}

/// Coefficients `(k0, k1)` of the cleared constraint `k0 + k1 * t`, given how
/// `beta_row * inverse_depth` depends on `t` at the top and bottom endpoints.
pub(crate) fn linear_constraint(
    seg: &SegmentRs,
    alpha: f64,
    top: (f64, f64),
    bottom: (f64, f64),
) -> (f64, f64) {
    let (ru, rv) = seg.rows();
    let (nu0, nu1, du) = numerator_terms(seg.top_n.x, ru, alpha, top.0, top.1);
    let (nv0, nv1, dv) = numerator_terms(seg.bottom_n.x, rv, alpha, bottom.0, bottom.1);
    (nu0 * dv - nv0 * du, nu1 * dv - nv1 * du)
}

/// Result of the inverse-depth step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LambdaSolution {
    pub lambda: f64,
    /// The constraint did not depend on `lambda` and was satisfied, so the
    /// returned value carries no information.
    pub degenerate: bool,
}

/// Solves for the right-plane inverse depth given `(alpha, beta, delta)` and a
/// segment on the right plane.
///
/// The equation is at most quadratic in `lambda`; the root of least magnitude
/// is returned. Endpoints left of `delta` contribute through the left plane.
pub fn solve_lambda(
    alpha: f64,
    beta: f64,
    delta: f64,
    seg: &SegmentRs,
) -> Result<LambdaSolution> {
    let (xu, xv) = (seg.top_n.x, seg.bottom_n.x);
    if xu < delta && xv < delta {
        return Err(Error::SideMismatch);
    }
    let terms = |x: f64| {
        if x < delta {
            (beta * (delta - x), 0.0)
        } else {
            (0.0, beta * (x - delta))
        }
    };
    let (k0, k1) = linear_constraint(seg, alpha, terms(xu), terms(xv));
    let scale = k0.abs().max(k1.abs());
    if k1.abs() <= 1e-14 * scale || scale == 0.0 {
        // No lambda dependence: either identically satisfied or inconsistent.
        return if k0.abs() <= 1e-15 {
            Ok(LambdaSolution {
                lambda: 0.0,
                degenerate: true,
            })
        } else {
            Err(Error::NoSolution)
        };
    }
    match quadratic_roots_by_magnitude(0.0, k1, k0).first() {
        Some(&lambda) if lambda.is_finite() => Ok(LambdaSolution {
            lambda,
            degenerate: false,
        }),
        _ => Err(Error::NoSolution),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::camera::CameraModel;
    use crate::motion::compensate_with_inverse_depth;

    fn cam() -> CameraModel {
        CameraModel::centered(816.0, 640, 380, 0.0).unwrap()
    }

    fn seg(a: (f64, f64), b: (f64, f64)) -> SegmentRs {
        SegmentRs::new(&cam(), 0, a, b).unwrap()
    }

    /// `(U_1 - V_1) D_u D_v` from the compensation map, with the side's
    /// inverse-depth branch applied without clamping.
    fn cleared_direct(s: &SegmentRs, side: PlaneSide, m: &RsModel) -> f64 {
        let (ru, rv) = s.rows();
        let sigma = |x: f64| match side {
            PlaneSide::Left => m.delta() - x,
            PlaneSide::Right => m.lambda() * (x - m.delta()),
        };
        let u = compensate_with_inverse_depth(s.top_n, ru, m.alpha(), m.beta(), sigma(s.top_n.x))
            .unwrap();
        let v =
            compensate_with_inverse_depth(s.bottom_n, rv, m.alpha(), m.beta(), sigma(s.bottom_n.x))
                .unwrap();
        let du = 1.0 - 2.0 * s.top_n.x * m.alpha() * ru;
        let dv = 1.0 - 2.0 * s.bottom_n.x * m.alpha() * rv;
        (u.x / u.z - v.x / v.z) * du * dv
    }

    fn eval_monomials(map: &BTreeMap<Exponents, f64>, m: &RsModel) -> f64 {
        let vars = [m.alpha(), m.beta(), m.delta(), m.lambda()];
        map.iter()
            .map(|(e, c)| c * (0..4).map(|i| vars[i].powi(e[i] as i32)).product::<f64>())
            .sum()
    }

    #[test]
    fn monomial_support_has_eleven_terms() {
        let s = seg((100.0, 20.0), (104.0, 300.0));
        let c = build_constraint(&s, PlaneSide::Left);
        let m = c.monomials();
        assert_eq!(m.len(), 11);
        let max_degree = m.keys().map(|e| e.iter().sum::<u8>()).max().unwrap();
        assert_eq!(max_degree, 5);
        let r = build_constraint(&s, PlaneSide::Right).monomials();
        assert_eq!(r.len(), 11);
        assert!(r.keys().filter(|e| e[1] > 0).all(|e| e[3] == 1));
    }

    #[test]
    fn zero_motion_leaves_the_raw_column_difference() {
        let s = seg((100.0, 20.0), (104.0, 300.0));
        let c = build_constraint(&s, PlaneSide::Left);
        let v = c.evaluate(&RsModel::new(0.0, 0.0, 0.1, 0.7));
        assert!((v - (s.top_n.x - s.bottom_n.x)).abs() < 1e-15);
    }

    #[test]
    fn polynomial_agrees_with_compensation_map() {
        let cases = [
            ((100.0, 20.0), (104.0, 300.0), RsModel::new(3e-5, 8e-4, 0.05, 0.6)),
            ((500.0, 40.0), (491.0, 350.0), RsModel::new(-2e-5, 5e-4, -0.1, 1.3)),
            ((320.0, 0.0), (320.0, 379.0), RsModel::new(1e-4, -3e-4, 0.2, 0.0)),
        ];
        for (a, b, m) in cases {
            let s = seg(a, b);
            for side in [PlaneSide::Left, PlaneSide::Right] {
                let direct = cleared_direct(&s, side, &m);
                for scale in [1.0, 379.0] {
                    let c = SegmentConstraint::new(&s, side, scale);
                    let poly = c.evaluate(&m);
                    assert!((poly - direct).abs() < 1e-10, "{side:?} {scale}: {poly} vs {direct}");
                    let mono = eval_monomials(&c.monomials(), &m);
                    assert!((mono - direct).abs() < 1e-10, "{mono} vs {direct}");
                }
            }
        }
    }

    #[test]
    fn lambda_recovered_from_constructed_segment() {
        // Bottom endpoint placed so that the compensated segment is vertical
        // for lambda = 0.8.
        let (alpha, beta, delta, lambda) = (2e-5, 6e-4, -0.05, 0.8);
        let c = cam();
        let top = (450.0, 30.0);
        let m = RsModel::new(alpha, beta, delta, lambda);
        let target = {
            let p = c.normalize(top);
            let u = crate::motion::compensate_point(p, 30.0, &m).unwrap();
            u.x / u.z
        };
        let row = 330.0;
        let mut x = c.normalize_x(450.0);
        for _ in 0..60 {
            let f = |x: f64| {
                let v = crate::motion::compensate_point(
                    crate::camera::NormalizedPoint::new(x, c.normalize((0.0, row)).y),
                    row,
                    &m,
                )
                .unwrap();
                v.x / v.z - target
            };
            let d = (f(x + 1e-7) - f(x - 1e-7)) / 2e-7;
            x -= f(x) / d;
        }
        let bottom = c.denormalize(crate::camera::NormalizedPoint::new(x, c.normalize((0.0, row)).y));
        let s = seg(top, bottom);
        let sol = solve_lambda(alpha, beta, delta, &s).unwrap();
        assert!(!sol.degenerate);
        assert!((sol.lambda - lambda).abs() < 1e-9, "{}", sol.lambda);
    }

    #[test]
    fn lambda_side_mismatch() {
        let s = seg((100.0, 20.0), (104.0, 300.0));
        assert!(matches!(solve_lambda(1e-5, 1e-4, 0.3, &s), Err(Error::SideMismatch)));
    }

    #[test]
    fn lambda_cancels_without_translation() {
        let s = seg((500.0, 20.0), (500.0, 300.0));
        let sol = solve_lambda(0.0, 0.0, 0.0, &s).unwrap();
        assert!(sol.degenerate);
        assert_eq!(sol.lambda, 0.0);
    }
}
