//! Dense integer polynomials and division polynomials.

use crate::curve::CurveModel;
use rug::Integer;
use std::ops::{Add, Mul, Sub};

/// Coefficients from the constant term up; no trailing zeros.
#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct ZPoly {
    pub coeffs: Vec<Integer>,
}

impl ZPoly {
    pub fn new(mut coeffs: Vec<Integer>) -> Self {
        while coeffs.last().is_some_and(|c| *c == 0) {
            coeffs.pop();
        }
        ZPoly { coeffs }
    }

    pub fn from_i64(c: &[i64]) -> Self {
        Self::new(c.iter().map(|&v| Integer::from(v)).collect())
    }

    pub fn constant(c: i64) -> Self {
        Self::from_i64(&[c])
    }

    pub fn zero() -> Self {
        ZPoly { coeffs: Vec::new() }
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// Degree; the zero polynomial has degree 0 here as well.
    pub fn degree(&self) -> usize {
        self.coeffs.len().saturating_sub(1)
    }

    pub fn leading(&self) -> Integer {
        self.coeffs.last().cloned().unwrap_or_default()
    }

    pub fn scale(&self, k: &Integer) -> ZPoly {
        ZPoly::new(self.coeffs.iter().map(|c| Integer::from(c * k)).collect())
    }

    pub fn pow(&self, e: u32) -> ZPoly {
        let mut r = ZPoly::constant(1);
        for _ in 0..e {
            r = &r * self;
        }
        r
    }

    /// Coefficients reduced into [0, p).
    pub fn reduce(&self, p: u64) -> Vec<u64> {
        crate::fp::trim(self.coeffs.iter().map(|c| c.mod_u(p as u32) as u64).collect())
    }

    pub fn eval(&self, x: &Integer) -> Integer {
        let mut acc = Integer::new();
        for c in self.coeffs.iter().rev() {
            acc *= x;
            acc += c;
        }
        acc
    }
}

impl Add for &ZPoly {
    type Output = ZPoly;
    fn add(self, o: &ZPoly) -> ZPoly {
        let n = self.coeffs.len().max(o.coeffs.len());
        let z = Integer::new();
        ZPoly::new(
            (0..n)
                .map(|i| Integer::from(self.coeffs.get(i).unwrap_or(&z) + o.coeffs.get(i).unwrap_or(&z)))
                .collect(),
        )
    }
}

impl Sub for &ZPoly {
    type Output = ZPoly;
    fn sub(self, o: &ZPoly) -> ZPoly {
        let n = self.coeffs.len().max(o.coeffs.len());
        let z = Integer::new();
        ZPoly::new(
            (0..n)
                .map(|i| Integer::from(self.coeffs.get(i).unwrap_or(&z) - o.coeffs.get(i).unwrap_or(&z)))
                .collect(),
        )
    }
}

impl Mul for &ZPoly {
    type Output = ZPoly;
    fn mul(self, o: &ZPoly) -> ZPoly {
        if self.is_zero() || o.is_zero() {
            return ZPoly::zero();
        }
        let mut out = vec![Integer::new(); self.coeffs.len() + o.coeffs.len() - 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            for (j, b) in o.coeffs.iter().enumerate() {
                out[i + j] += Integer::from(a * b);
            }
        }
        ZPoly::new(out)
    }
}

/// The reduced division polynomials f_n: ψ_n = f_n for odd n and
/// ψ_n = (2y + a1x + a3)·f_n for even n, so all f_n lie in Z[x].
pub struct DivisionPolynomials {
    cubic: ZPoly,
    cubic_sq: ZPoly,
    f: Vec<ZPoly>,
}

impl DivisionPolynomials {
    pub fn new(e: &CurveModel) -> Self {
        let (b2, b4, b6, b8) = (e.b2(), e.b4(), e.b6(), e.b8());
        let cubic = e.two_torsion_cubic();
        let f3 = ZPoly::new(vec![b8.clone(), 3 * b6.clone(), 3 * b4.clone(), b2.clone(), Integer::from(3)]);
        let f4 = ZPoly::new(vec![
            Integer::from(&b4 * &b8) - Integer::from(&b6 * &b6),
            Integer::from(&b2 * &b8) - Integer::from(&b4 * &b6),
            10 * b8,
            10 * b6,
            5 * b4,
            b2,
            Integer::from(2),
        ]);
        let cubic_sq = &cubic * &cubic;
        DivisionPolynomials {
            cubic,
            cubic_sq,
            f: vec![ZPoly::zero(), ZPoly::constant(1), ZPoly::constant(1), f3, f4],
        }
    }

    pub fn cubic(&self) -> &ZPoly {
        &self.cubic
    }

    pub fn f(&mut self, n: usize) -> ZPoly {
        while self.f.len() <= n {
            let k = self.f.len();
            let m = k / 2;
            let g = |i: usize| &self.f[i];
            let next = if k % 2 == 1 {
                let a = &(g(m + 2) * &g(m).pow(3));
                let b = &(g(m - 1) * &g(m + 1).pow(3));
                if m % 2 == 0 {
                    &(&self.cubic_sq * a) - b
                } else {
                    a - &(&self.cubic_sq * b)
                }
            } else {
                let a = &(g(m + 2) * &g(m - 1).pow(2));
                let b = &(g(m - 2) * &g(m + 1).pow(2));
                g(m) * &(a - b)
            };
            self.f.push(next);
        }
        self.f[n].clone()
    }
}

/// Polynomial whose roots are the x-coordinates of the nonzero N-torsion
/// points: f_N for odd N and (4x³ + b2x² + 2b4x + b6)·f_N for even N,
/// of degree (N² − 1)/2 or (N² + 2)/2.
pub fn division_polynomial(e: &CurveModel, n: usize) -> ZPoly {
    assert!(n >= 2, "division polynomial needs N >= 2");
    let mut d = DivisionPolynomials::new(e);
    let f = d.f(n);
    if n % 2 == 0 {
        d.cubic() * &f
    } else {
        f
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn x3_minus_x_two_torsion() {
        let e = CurveModel::new([0, 0, 0, -1, 0]).unwrap();
        let p = division_polynomial(&e, 2);
        assert_eq!(p, ZPoly::from_i64(&[0, -4, 0, 4]));
        for r in [-1, 0, 1] {
            assert_eq!(p.eval(&Integer::from(r)), 0);
        }
    }

    #[test]
    fn psi3_short_model() {
        // 3x⁴ + 6ax² + 12bx − a²
        let (a, b) = (-7i64, 11i64);
        let e = CurveModel::new([0, 0, 0, a, b]).unwrap();
        assert_eq!(division_polynomial(&e, 3), ZPoly::from_i64(&[-a * a, 12 * b, 6 * a, 0, 3]));
    }

    #[test]
    fn degrees() {
        let e = CurveModel::new([1, -1, 1, -3, 5]).unwrap();
        let mut d = DivisionPolynomials::new(&e);
        for n in 2..=12usize {
            let want = if n % 2 == 1 { (n * n - 1) / 2 } else { (n * n - 4) / 2 };
            assert_eq!(d.f(n).degree(), want, "n = {n}");
        }
        assert_eq!(division_polynomial(&e, 8).degree(), 33);
    }

    #[test]
    fn rational_torsion_points_are_roots() {
        // y² + y = x³ − x² has a rational 5-torsion point (0, 0)
        // (curve 11a3); x = 0 must be a root of f_5.
        let e = CurveModel::new([0, -1, 1, 0, 0]).unwrap();
        let mut d = DivisionPolynomials::new(&e);
        assert_eq!(d.f(5).eval(&Integer::new()), 0);
        // y² = x³ + 1 has 6-torsion; (2, 3) has order 6
        let e = CurveModel::new([0, 0, 0, 0, 1]).unwrap();
        let mut d = DivisionPolynomials::new(&e);
        assert_eq!(d.f(6).eval(&Integer::from(2)), 0);
        assert_ne!(d.f(3).eval(&Integer::from(2)), 0);
    }
}
