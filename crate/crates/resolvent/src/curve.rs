//! Integral long Weierstrass models.

use crate::error::{Error, Result};
use crate::zpoly::ZPoly;
use rug::{Integer, Rational};
use serde::{Deserialize, Serialize};
use std::fmt;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CurveModel {
    /// a1, a2, a3, a4, a6
    pub a: [i64; 5],
}

/// j-invariants of the thirteen CM curves over Q.
const CM_J: [i64; 13] = [
    0,
    1728,
    -3375,
    8000,
    -32768,
    54000,
    287496,
    -884736,
    -12288000,
    16581375,
    -884736000,
    -147197952000,
    -262537412640768000,
];

impl CurveModel {
    pub fn new(a: [i64; 5]) -> Result<Self> {
        let e = CurveModel { a };
        if e.discriminant() == 0 {
            return Err(Error::Singular);
        }
        Ok(e)
    }

    fn ai(&self, i: usize) -> Integer {
        Integer::from(self.a[i])
    }

    pub fn b2(&self) -> Integer {
        let (a1, a2) = (self.ai(0), self.ai(1));
        Integer::from(&a1 * &a1) + 4 * a2
    }

    pub fn b4(&self) -> Integer {
        2 * self.ai(3) + self.ai(0) * self.ai(2)
    }

    pub fn b6(&self) -> Integer {
        let a3 = self.ai(2);
        Integer::from(&a3 * &a3) + 4 * self.ai(4)
    }

    pub fn b8(&self) -> Integer {
        let [a1, a2, a3, a4, a6] = [0, 1, 2, 3, 4].map(|i| self.ai(i));
        Integer::from(&a1 * &a1) * &a6 + 4 * Integer::from(&a2 * &a6) - Integer::from(&a1 * &a3) * &a4
            + Integer::from(&a2 * &a3) * &a3
            - Integer::from(&a4 * &a4)
    }

    pub fn c4(&self) -> Integer {
        let b2 = self.b2();
        Integer::from(&b2 * &b2) - 24 * self.b4()
    }

    pub fn c6(&self) -> Integer {
        let (b2, b4, b6) = (self.b2(), self.b4(), self.b6());
        -Integer::from(&b2 * &b2) * &b2 + 36 * Integer::from(&b2 * &b4) - 216 * b6
    }

    pub fn discriminant(&self) -> Integer {
        let (b2, b4, b6, b8) = (self.b2(), self.b4(), self.b6(), self.b8());
        -Integer::from(&b2 * &b2) * &b8 - 8 * Integer::from(&b4 * &b4) * &b4 - 27 * Integer::from(&b6 * &b6)
            + 9 * Integer::from(&b2 * &b4) * &b6
    }

    pub fn j_invariant(&self) -> Rational {
        let c4 = self.c4();
        Rational::from((Integer::from(&c4 * &c4) * &c4, self.discriminant()))
    }

    pub fn is_cm(&self) -> bool {
        let j = self.j_invariant();
        CM_J.iter().any(|&c| j == c)
    }

    /// 4x³ + b2x² + 2b4x + b6 = (2y + a1x + a3)².
    pub fn two_torsion_cubic(&self) -> ZPoly {
        ZPoly::new(vec![self.b6(), 2 * self.b4(), self.b2(), Integer::from(4)])
    }

    /// Whether (x, y) satisfies the model (exact, for integer points).
    pub fn contains(&self, x: &Integer, y: &Integer) -> bool {
        let [a1, a2, a3, a4, a6] = self.a;
        let lhs = Integer::from(y * y) + a1 * Integer::from(x * y) + a3 * y.clone();
        let rhs = Integer::from(x * x) * x + a2 * Integer::from(x * x) + a4 * x.clone() + a6;
        lhs == rhs
    }

    /// #E(F_p) for an odd prime p of good reduction, by counting.
    pub fn count_points(&self, p: u64) -> u64 {
        let r = self.two_torsion_cubic().reduce(p);
        // (2y + a1x + a3)² = R(x): each x contributes 1 + (R(x)/p) points
        let mut is_sq = vec![false; p as usize];
        for t in 0..p {
            is_sq[(t * t % p) as usize] = true;
        }
        let mut n = 1;
        for x in 0..p {
            let v = crate::fp::eval(&r, x, p);
            n += if v == 0 {
                1
            } else if is_sq[v as usize] {
                2
            } else {
                0
            };
        }
        n
    }

    pub fn trace_of_frobenius(&self, p: u64) -> i64 {
        p as i64 + 1 - self.count_points(p) as i64
    }

    /// Chord-and-tangent addition on the reduction mod p; None is O.
    pub fn add_mod(&self, a: Option<(u64, u64)>, b: Option<(u64, u64)>, p: u64) -> Option<(u64, u64)> {
        use crate::fp::inv;
        let (Some((x1, y1)), Some((x2, y2))) = (a, b) else { return a.or(b) };
        let [a1, a2, a3, a4, a6] = self.a.map(|v| v.rem_euclid(p as i64) as u64);
        let m = |u: u64, v: u64| ((u as u128 * v as u128) % p as u128) as u64;
        let neg = |u: u64| (p - u % p) % p;
        let (lambda, nu) = if x1 == x2 {
            let den = (2 * y1 + m(a1, x1) + a3) % p;
            if den == 0 {
                return None;
            }
            let di = inv(den, p);
            let num_l = (3 * m(x1, x1) + 2 * m(a2, x1) + a4 + neg(m(a1, y1))) % p;
            let num_n = (neg(m(m(x1, x1), x1)) + m(a4, x1) + 2 * a6 + neg(m(a3, y1))) % p;
            (m(num_l, di), m(num_n, di))
        } else {
            let di = inv((x2 + p - x1) % p, p);
            let l = m((y2 + p - y1) % p, di);
            let n = m((m(y1, x2) + neg(m(y2, x1))) % p, di);
            (l, n)
        };
        let x3 = (m(lambda, lambda) + m(a1, lambda) + neg(a2) + neg(x1) + neg(x2)) % p;
        let y3 = (neg(m((lambda + a1) % p, x3)) + neg(nu) + neg(a3)) % p;
        Some((x3, y3))
    }

    /// Whether E[n] ⊆ E(F_p), i.e. Frob_p acts trivially on E[n], for p of
    /// good reduction not dividing n. Counts the points killed by n.
    pub fn torsion_is_rational(&self, n: u64, p: u64) -> bool {
        if (p - 1) % n != 0 || self.count_points(p) % (n * n) != 0 {
            return false;
        }
        let r = self.two_torsion_cubic().reduce(p);
        let mut roots = vec![Vec::new(); p as usize];
        for s in 0..p {
            roots[(s * s % p) as usize].push(s);
        }
        let [a1, _, a3, _, _] = self.a.map(|v| v.rem_euclid(p as i64) as u64);
        let half = crate::fp::inv(2, p);
        let mut count = 1;
        for x in 0..p {
            let v = crate::fp::eval(&r, x, p);
            for &s in &roots[v as usize] {
                // 2y + a1x + a3 = s
                let y = ((s + 2 * p - (a1 * x % p) - a3) % p) * half % p;
                let pt = Some((x, y));
                let mut acc = None;
                let mut base = pt;
                let mut k = n;
                while k > 0 {
                    if k & 1 == 1 {
                        acc = self.add_mod(acc, base, p);
                    }
                    base = self.add_mod(base, base, p);
                    k >>= 1;
                }
                if acc.is_none() {
                    count += 1;
                }
            }
        }
        count == n * n
    }
}

impl fmt::Display for CurveModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let a = self.a;
        write!(f, "[{},{},{},{},{}]", a[0], a[1], a[2], a[3], a[4])
    }
}

/// Parse "a1,a2,a3,a4,a6", optionally in brackets. Two values "a4,a6" give a
/// short model.
pub fn parse_curve(s: &str) -> Result<CurveModel> {
    let t = s.trim().trim_start_matches('[').trim_end_matches(']');
    let vals = t
        .split(',')
        .map(|v| v.trim().parse::<i64>().map_err(|_| Error::Parse(format!("bad coefficient {v:?}"))))
        .collect::<Result<Vec<_>>>()?;
    let a = match vals.len() {
        5 => [vals[0], vals[1], vals[2], vals[3], vals[4]],
        2 => [0, 0, 0, vals[0], vals[1]],
        n => return Err(Error::Parse(format!("expected 5 (or 2) coefficients, got {n}"))),
    };
    // keep invariants inside i128-free Integer math but reject absurd inputs
    if a.iter().any(|v| v.unsigned_abs() > 1 << 40) {
        return Err(Error::Parse("coefficients larger than 2^40 are not supported".into()));
    }
    CurveModel::new(a)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn invariants_of_11a1() {
        // y² + y = x³ − x² − 10x − 20
        let e = CurveModel::new([0, -1, 1, -10, -20]).unwrap();
        assert_eq!(e.discriminant(), -161051);
        assert_eq!(e.c4(), 496);
        assert_eq!(e.c6(), 20008);
        // 11a1 has a_p: a2 = -2, a3 = -1, a5 = 1, a7 = -2
        assert_eq!(e.trace_of_frobenius(3), -1);
        assert_eq!(e.trace_of_frobenius(5), 1);
        assert_eq!(e.trace_of_frobenius(7), -2);
        assert!(!e.is_cm());
    }

    #[test]
    fn cm_and_singular() {
        assert!(CurveModel::new([0, 0, 0, -1, 0]).unwrap().is_cm());
        assert!(CurveModel::new([0, 0, 0, 0, 0]).is_err());
        assert!(parse_curve("1,2").unwrap().a == [0, 0, 0, 1, 2]);
        assert!(parse_curve("[0,1,0,-28,48]").is_ok());
        assert!(parse_curve("0,1,0").is_err());
        assert!(parse_curve("x,1,0,0,0").is_err());
    }

    #[test]
    fn rational_torsion_mod_p() {
        // y² = x³ + x² − 28x + 48: E[16] ⊆ E(F_5441), not over F_17
        let e = parse_curve("0,1,0,-28,48").unwrap();
        assert!(e.torsion_is_rational(16, 5441));
        assert!(!e.torsion_is_rational(16, 17));
        // y² = x³ − x has full 2-torsion over every F_p
        let e = CurveModel::new([0, 0, 0, -1, 0]).unwrap();
        assert!(e.torsion_is_rational(2, 7));
        assert!(e.add_mod(Some((0, 0)), Some((0, 0)), 7).is_none());
    }

    #[test]
    fn row2_curve_j() {
        let e = parse_curve("0,1,0,-28,48").unwrap();
        assert_eq!(e.j_invariant(), 78608);
    }
}
