//! Dense univariate polynomials with real coefficients.

use std::ops::{Add, Mul, Neg, Sub};

use nalgebra::DMatrix;

/// Coefficients in ascending order of degree.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Poly(pub Vec<f64>);

impl Poly {
    pub fn new(coeffs: impl Into<Vec<f64>>) -> Self {
        Self(coeffs.into())
    }

    pub fn constant(c: f64) -> Self {
        Self(vec![c])
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.0
    }

    pub fn coeff(&self, k: usize) -> f64 {
        self.0.get(k).copied().unwrap_or(0.0)
    }

    /// Index of the highest coefficient that is not exactly zero.
    pub fn degree(&self) -> Option<usize> {
        self.0.iter().rposition(|&c| c != 0.0)
    }

    pub fn max_abs_coeff(&self) -> f64 {
        self.0.iter().fold(0.0, |m, c| m.max(c.abs()))
    }

    #[inline]
    pub fn eval(&self, x: f64) -> f64 {
        self.0.iter().rev().fold(0.0, |acc, &c| acc * x + c)
    }

    /// Value and first derivative by Horner's scheme.
    pub fn eval_with_derivative(&self, x: f64) -> (f64, f64) {
        let mut p = 0.0;
        let mut dp = 0.0;
        for &c in self.0.iter().rev() {
            dp = dp * x + p;
            p = p * x + c;
        }
        (p, dp)
    }

    pub fn derivative(&self) -> Poly {
        Poly(
            self.0
                .iter()
                .enumerate()
                .skip(1)
                .map(|(k, &c)| k as f64 * c)
                .collect(),
        )
    }

    pub fn scale(&self, s: f64) -> Poly {
        Poly(self.0.iter().map(|c| c * s).collect())
    }

    /// Real roots, polished and sorted ascending.
    ///
    /// Roots come from the eigenvalues of the companion matrix. Leading
    /// coefficients below `1e-14` of the largest are dropped first. Complex
    /// roots with `|im| < imag_tol * (1 + |re|)` are projected to the real axis
    /// and refined by Newton steps; roots closer than `merge_tol` are merged.
    pub fn real_roots(&self, imag_tol: f64, merge_tol: f64) -> Vec<f64> {
        let scale = self.max_abs_coeff();
        if scale == 0.0 || !scale.is_finite() {
            return Vec::new();
        }
        let cutoff = 1e-14 * scale;
        let Some(n) = self.0.iter().rposition(|c| c.abs() > cutoff) else {
            return Vec::new();
        };
        // factor out exact zero roots so the companion matrix stays well scaled
        let zeros = self.0.iter().take_while(|&&c| c == 0.0).count();
        let mut roots = Vec::new();
        if zeros > 0 {
            roots.push(0.0);
        }
        let coeffs = &self.0[zeros..=n];
        let deg = coeffs.len() - 1;
        match deg {
            0 => {}
            1 => roots.push(-coeffs[0] / coeffs[1]),
            _ => {
                let lead = coeffs[deg];
                let mut companion = DMatrix::<f64>::zeros(deg, deg);
                for i in 1..deg {
                    companion[(i, i - 1)] = 1.0;
                }
                for i in 0..deg {
                    companion[(i, deg - 1)] = -coeffs[i] / lead;
                }
                for z in companion.complex_eigenvalues().iter() {
                    if z.im.abs() < imag_tol * (1.0 + z.re.abs()) {
                        roots.push(self.polish(z.re));
                    }
                }
            }
        }
        roots.retain(|r| r.is_finite());
        roots.sort_by(|a, b| a.total_cmp(b));
        roots.dedup_by(|a, b| (*a - *b).abs() <= merge_tol * (1.0 + b.abs()));
        roots
    }

    /// Newton refinement that never accepts a step that increases |p|.
    pub fn polish(&self, mut x: f64) -> f64 {
        let mut fx = self.eval(x).abs();
        for _ in 0..8 {
            let (p, dp) = self.eval_with_derivative(x);
            if dp == 0.0 || p == 0.0 {
                break;
            }
            let next = x - p / dp;
            let fn_ = self.eval(next).abs();
            if !(fn_ < fx) {
                break;
            }
            x = next;
            fx = fn_;
        }
        x
    }
}

impl Add for &Poly {
    type Output = Poly;
    fn add(self, rhs: &Poly) -> Poly {
        let n = self.0.len().max(rhs.0.len());
        Poly((0..n).map(|k| self.coeff(k) + rhs.coeff(k)).collect())
    }
}

impl Sub for &Poly {
    type Output = Poly;
    fn sub(self, rhs: &Poly) -> Poly {
        let n = self.0.len().max(rhs.0.len());
        Poly((0..n).map(|k| self.coeff(k) - rhs.coeff(k)).collect())
    }
}

impl Mul for &Poly {
    type Output = Poly;
    fn mul(self, rhs: &Poly) -> Poly {
        if self.0.is_empty() || rhs.0.is_empty() {
            return Poly(Vec::new());
        }
        let mut out = vec![0.0; self.0.len() + rhs.0.len() - 1];
        for (i, a) in self.0.iter().enumerate() {
            for (j, b) in rhs.0.iter().enumerate() {
                out[i + j] += a * b;
            }
        }
        Poly(out)
    }
}

impl Neg for &Poly {
    type Output = Poly;
    fn neg(self) -> Poly {
        self.scale(-1.0)
    }
}

/// Real roots of `c2 x^2 + c1 x + c0`, ordered by ascending absolute value.
///
/// Falls back to the linear root when `c2` vanishes. Returns an empty list when
/// there is no real root or the polynomial is identically zero.
pub fn quadratic_roots_by_magnitude(c2: f64, c1: f64, c0: f64) -> Vec<f64> {
    let scale = c2.abs().max(c1.abs()).max(c0.abs());
    if scale == 0.0 {
        return Vec::new();
    }
    let mut roots = if c2.abs() <= 1e-14 * scale {
        if c1 == 0.0 {
            Vec::new()
        } else {
            vec![-c0 / c1]
        }
    } else {
        let disc = c1 * c1 - 4.0 * c2 * c0;
        if disc < 0.0 {
            Vec::new()
        } else {
            // cancellation-free pair
            let q = -0.5 * (c1 + c1.signum_or_one() * disc.sqrt());
            let mut r = Vec::with_capacity(2);
            if q != 0.0 {
                r.push(c0 / q);
            }
            r.push(q / c2);
            if q == 0.0 {
                r.push(0.0);
            }
            r
        }
    };
    roots.sort_by(|a, b| a.abs().total_cmp(&b.abs()).then(a.total_cmp(b)));
    roots
}

trait SignumOrOne {
    fn signum_or_one(self) -> f64;
}

impl SignumOrOne for f64 {
    fn signum_or_one(self) -> f64 {
        if self < 0.0 {
            -1.0
        } else {
            1.0
        }
    }
}
