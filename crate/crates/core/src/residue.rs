//! 2x2 matrices over Z/p^m and the projective line.
//!
//! Group computations use matrices packed into a `u32` as the mixed-radix
//! number `((a*m + b)*m + c)*m + d`; for 2-power moduli this is plain bit
//! packing. `MatRing` holds the modulus and does the packed arithmetic.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;

/// Largest supported modulus; four entries must fit in 32 bits.
pub const MAX_MODULUS: u32 = 256;

/// Arithmetic on packed 2x2 matrices modulo a fixed `m`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct MatRing {
    m: u32,
    shift: u32,
    pow2: bool,
}

impl MatRing {
    /// Ring of 2x2 matrices mod `m`. Panics on moduli outside 1..=256.
    pub fn new(m: u32) -> Self {
        assert!((1..=MAX_MODULUS).contains(&m), "modulus {m} out of range");
        let pow2 = m.is_power_of_two();
        MatRing { m, shift: if pow2 { m.trailing_zeros() } else { 0 }, pow2 }
    }

    /// Ring mod 2^k.
    pub fn pow2(k: u32) -> Self {
        Self::new(1 << k)
    }

    #[inline]
    pub fn modulus(&self) -> u32 {
        self.m
    }

    /// Exponent k when the modulus is 2^k.
    pub fn exponent(&self) -> u32 {
        debug_assert!(self.pow2);
        self.shift
    }

    /// Number of packed codes, m^4.
    pub fn space_size(&self) -> usize {
        (self.m as usize).pow(4)
    }

    #[inline]
    pub fn pack(&self, e: [u32; 4]) -> u32 {
        let m = self.m;
        ((e[0] * m + e[1]) * m + e[2]) * m + e[3]
    }

    #[inline]
    pub fn pack_i64(&self, e: [i64; 4]) -> u32 {
        let m = self.m as i64;
        self.pack(e.map(|x| x.rem_euclid(m) as u32))
    }

    #[inline]
    pub fn unpack(&self, x: u32) -> [u32; 4] {
        if self.pow2 {
            let s = self.shift;
            let k = self.m - 1;
            [x >> (3 * s), (x >> (2 * s)) & k, (x >> s) & k, x & k]
        } else {
            let m = self.m;
            [x / (m * m * m), (x / (m * m)) % m, (x / m) % m, x % m]
        }
    }

    #[inline]
    fn red(&self, x: u32) -> u32 {
        if self.pow2 {
            x & (self.m - 1)
        } else {
            x % self.m
        }
    }

    #[inline]
    pub fn mul(&self, x: u32, y: u32) -> u32 {
        let [a, b, c, d] = self.unpack(x);
        let [e, f, g, h] = self.unpack(y);
        self.pack([
            self.red(a * e + b * g),
            self.red(a * f + b * h),
            self.red(c * e + d * g),
            self.red(c * f + d * h),
        ])
    }

    #[inline]
    pub fn det(&self, x: u32) -> u32 {
        let [a, b, c, d] = self.unpack(x);
        let m = self.m;
        self.red(a * d + (m - self.red(b * c)))
    }

    #[inline]
    pub fn trace(&self, x: u32) -> u32 {
        let [a, _, _, d] = self.unpack(x);
        self.red(a + d)
    }

    pub fn is_unit(&self, x: u32) -> bool {
        is_unit_mod(self.det(x) as i64, self.m as i64)
    }

    pub fn inv(&self, x: u32) -> Option<u32> {
        let [a, b, c, d] = self.unpack(x);
        let di = inv_mod(self.det(x) as i64, self.m as i64)? as u32;
        let m = self.m;
        let n = |v: u32| self.red(m - v);
        Some(self.pack([
            self.red(d * di),
            self.red(n(b) * di),
            self.red(n(c) * di),
            self.red(a * di),
        ]))
    }

    #[inline]
    pub fn neg(&self, x: u32) -> u32 {
        let m = self.m;
        self.pack(self.unpack(x).map(|v| self.red(m - v)))
    }

    pub fn transpose(&self, x: u32) -> u32 {
        let [a, b, c, d] = self.unpack(x);
        self.pack([a, c, b, d])
    }

    pub fn identity(&self) -> u32 {
        self.pack([1 % self.m, 0, 0, 1 % self.m])
    }

    pub fn minus_identity(&self) -> u32 {
        self.neg(self.identity())
    }

    pub fn pow(&self, x: u32, mut e: u64) -> u32 {
        let mut base = x;
        let mut acc = self.identity();
        while e > 0 {
            if e & 1 == 1 {
                acc = self.mul(acc, base);
            }
            base = self.mul(base, base);
            e >>= 1;
        }
        acc
    }

    /// Multiplicative order of a unit matrix.
    pub fn order(&self, x: u32) -> u64 {
        let id = self.identity();
        let mut y = x;
        let mut n = 1;
        while y != id {
            y = self.mul(y, x);
            n += 1;
        }
        n
    }

    /// Reduce a packed matrix into a ring whose modulus divides ours.
    #[inline]
    pub fn reduce_to(&self, x: u32, target: &MatRing) -> u32 {
        debug_assert!(self.m % target.m == 0);
        if self.pow2 && target.pow2 {
            let k = target.m - 1;
            let s = self.shift;
            let t = target.shift;
            ((x >> (3 * s)) & k) << (3 * t)
                | ((x >> (2 * s)) & k) << (2 * t)
                | ((x >> s) & k) << t
                | (x & k)
        } else {
            target.pack(self.unpack(x).map(|v| v % target.m))
        }
    }

    /// All lifts of `x` into `target` (whose modulus is a multiple of ours).
    pub fn lifts(&self, x: u32, target: &MatRing) -> impl Iterator<Item = u32> + '_ {
        let t = *target;
        let r = t.m / self.m;
        let e = self.unpack(x);
        let m = self.m;
        (0..r.pow(4)).map(move |i| {
            let q = [i / (r * r * r), (i / (r * r)) % r, (i / r) % r, i % r];
            t.pack([e[0] + m * q[0], e[1] + m * q[1], e[2] + m * q[2], e[3] + m * q[3]])
        })
    }

    /// All invertible matrices, in increasing packed order.
    pub fn units(&self) -> impl Iterator<Item = u32> + '_ {
        (0..self.space_size() as u32).filter(move |&x| self.is_unit(x))
    }

    /// Right action of `x` on a row vector.
    #[inline]
    pub fn act_row(&self, v: (u32, u32), x: u32) -> (u32, u32) {
        let [a, b, c, d] = self.unpack(x);
        (self.red(v.0 * a + v.1 * c), self.red(v.0 * b + v.1 * d))
    }

    pub fn to_matrix(&self, x: u32) -> ResidueMatrix {
        ResidueMatrix { modulus: self.m, entries: self.unpack(x) }
    }
}

pub fn gcd(a: i64, b: i64) -> i64 {
    let (mut a, mut b) = (a.abs(), b.abs());
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

pub fn is_unit_mod(a: i64, m: i64) -> bool {
    gcd(a.rem_euclid(m), m) == 1
}

/// Inverse of `a` mod `m` by the extended Euclidean algorithm.
pub fn inv_mod(a: i64, m: i64) -> Option<i64> {
    let (mut r0, mut r1) = (a.rem_euclid(m), m);
    let (mut s0, mut s1) = (1i64, 0i64);
    while r1 != 0 {
        let q = r0 / r1;
        (r0, r1) = (r1, r0 - q * r1);
        (s0, s1) = (s1, s0 - q * s1);
    }
    if r0 == 1 || m == 1 {
        Some(s0.rem_euclid(m))
    } else {
        None
    }
}

/// 2-adic valuation, with v2(0) = `cap`.
pub fn v2(x: u64, cap: u32) -> u32 {
    if x == 0 {
        cap
    } else {
        x.trailing_zeros().min(cap)
    }
}

/// Factor a prime power as (p, k). Returns None for other integers.
pub fn prime_power(m: u32) -> Option<(u32, u32)> {
    if m < 2 {
        return None;
    }
    let p = (2u64..)
        .take_while(|d| d * d <= m as u64)
        .find(|d| m as u64 % d == 0)
        .map_or(m, |d| d as u32);
    let mut k = 0;
    let mut r = m;
    while r % p == 0 {
        r /= p;
        k += 1;
    }
    (r == 1).then_some((p, k))
}

/// |GL2(Z/mZ)| for a prime power m.
pub fn gl2_order(m: u32) -> Result<u64> {
    if m == 1 {
        return Ok(1);
    }
    let (p, k) = prime_power(m).ok_or(Error::InvalidModulus(m))?;
    let p = p as u64;
    Ok(p.pow(4 * (k - 1)) * (p * p - 1) * (p * p - p))
}

/// A 2x2 matrix with entries reduced mod a prime power, row-major.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ResidueMatrix {
    pub modulus: u32,
    pub entries: [u32; 4],
}

impl ResidueMatrix {
    pub fn new(entries: [i64; 4], modulus: u32) -> Result<Self> {
        if modulus == 0 || modulus > MAX_MODULUS {
            return Err(Error::InvalidModulus(modulus));
        }
        let m = modulus as i64;
        Ok(ResidueMatrix { modulus, entries: entries.map(|x| x.rem_euclid(m) as u32) })
    }

    pub fn identity(modulus: u32) -> Self {
        Self::new([1, 0, 0, 1], modulus).expect("valid modulus")
    }

    pub fn ring(&self) -> MatRing {
        MatRing::new(self.modulus)
    }

    pub fn packed(&self) -> u32 {
        self.ring().pack(self.entries)
    }

    pub fn det(&self) -> u32 {
        self.ring().det(self.packed())
    }

    pub fn trace(&self) -> u32 {
        self.ring().trace(self.packed())
    }

    pub fn is_unit(&self) -> bool {
        is_unit_mod(self.det() as i64, self.modulus as i64)
    }

    pub fn mul(&self, other: &ResidueMatrix) -> Result<ResidueMatrix> {
        if self.modulus != other.modulus {
            return Err(Error::ModulusMismatch(self.modulus, other.modulus));
        }
        let r = self.ring();
        Ok(r.to_matrix(r.mul(self.packed(), other.packed())))
    }

    pub fn inv(&self) -> Result<ResidueMatrix> {
        let r = self.ring();
        r.inv(self.packed()).map(|x| r.to_matrix(x)).ok_or(Error::NotInvertible(self.modulus))
    }

    pub fn transpose(&self) -> ResidueMatrix {
        let [a, b, c, d] = self.entries;
        ResidueMatrix { modulus: self.modulus, entries: [a, c, b, d] }
    }

    /// Reduce to a modulus dividing the current one.
    pub fn reduce(&self, modulus: u32) -> Result<ResidueMatrix> {
        if modulus == 0 || self.modulus % modulus != 0 {
            return Err(Error::ModulusMismatch(self.modulus, modulus));
        }
        Ok(ResidueMatrix { modulus, entries: self.entries.map(|x| x % modulus) })
    }
}

pub fn mat_mul(a: &ResidueMatrix, b: &ResidueMatrix) -> Result<ResidueMatrix> {
    a.mul(b)
}

pub fn mat_inv(m: &ResidueMatrix) -> Result<ResidueMatrix> {
    m.inv()
}

impl fmt::Display for ResidueMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let [a, b, c, d] = self.entries;
        write!(f, "[[{a},{b}],[{c},{d}]] mod {}", self.modulus)
    }
}

/// Parse the four entries of `[[a,b],[c,d]]` (whitespace allowed).
pub fn parse_entries(s: &str) -> Result<[i64; 4]> {
    let t: String = s.chars().filter(|c| !c.is_whitespace()).collect();
    let bad = || Error::Parse(format!("expected [[a,b],[c,d]], got {s:?}"));
    let inner = t.strip_prefix("[[").and_then(|r| r.strip_suffix("]]")).ok_or_else(bad)?;
    let (r1, r2) = inner.split_once("],[").ok_or_else(bad)?;
    let mut out = [0i64; 4];
    for (i, row) in [r1, r2].iter().enumerate() {
        let (x, y) = row.split_once(',').ok_or_else(bad)?;
        out[2 * i] = x.parse().map_err(|_| bad())?;
        out[2 * i + 1] = y.parse().map_err(|_| bad())?;
    }
    Ok(out)
}

impl FromStr for ResidueMatrix {
    type Err = Error;

    /// Parses `[[a,b],[c,d]] mod m`.
    fn from_str(s: &str) -> Result<Self> {
        let (mat, m) = s
            .rsplit_once("mod")
            .ok_or_else(|| Error::Parse(format!("missing 'mod' in {s:?}")))?;
        let m: u32 = m.trim().parse().map_err(|_| Error::Parse(format!("bad modulus in {s:?}")))?;
        if m > MAX_MODULUS || prime_power(m).is_none() {
            return Err(Error::InvalidModulus(m));
        }
        ResidueMatrix::new(parse_entries(mat)?, m)
    }
}

/// A point of P^1(Z/m) stored as its canonical (lexicographically least)
/// representative under unit scaling.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ProjectivePoint {
    pub modulus: u32,
    pub x: u32,
    pub y: u32,
}

impl ProjectivePoint {
    /// Canonicalize `(x : y)`; None when the pair is not unimodular.
    pub fn new(x: i64, y: i64, modulus: u32) -> Option<Self> {
        let m = modulus as i64;
        let (x, y) = (x.rem_euclid(m), y.rem_euclid(m));
        if gcd(gcd(x, y), m) != 1 {
            return None;
        }
        let best = (1..m)
            .filter(|&u| is_unit_mod(u, m))
            .map(|u| ((u * x) % m, (u * y) % m))
            .min()?;
        Some(ProjectivePoint { modulus, x: best.0 as u32, y: best.1 as u32 })
    }

    /// Image under the right action v -> v·A.
    pub fn act(&self, a: &ResidueMatrix) -> Result<Self> {
        if a.modulus != self.modulus {
            return Err(Error::ModulusMismatch(self.modulus, a.modulus));
        }
        if !a.is_unit() {
            return Err(Error::NotInvertible(a.modulus));
        }
        let r = a.ring();
        let (x, y) = r.act_row((self.x, self.y), a.packed());
        Ok(Self::new(x as i64, y as i64, self.modulus).expect("units preserve unimodularity"))
    }
}

impl fmt::Display for ProjectivePoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}:{})", self.x, self.y)
    }
}

/// All canonical points of P^1(Z/m), sorted.
pub fn projective_line(modulus: u32) -> Vec<ProjectivePoint> {
    let m = modulus as i64;
    let mut pts: Vec<_> = (0..m)
        .flat_map(|x| (0..m).map(move |y| (x, y)))
        .filter_map(|(x, y)| ProjectivePoint::new(x, y, modulus))
        .collect();
    pts.sort();
    pts.dedup();
    pts
}

#[cfg(test)]
mod tests {
    use super::*;

    fn m(e: [i64; 4], n: u32) -> ResidueMatrix {
        ResidueMatrix::new(e, n).unwrap()
    }

    #[test]
    fn mul_examples() {
        let a = m([7, 14, 0, 1], 16);
        assert_eq!(a.mul(&ResidueMatrix::identity(16)).unwrap(), a);
        // (7*7, 7*14 + 14) = (49, 112) = (1, 0) mod 16
        assert_eq!(a.mul(&a).unwrap(), ResidueMatrix::identity(16));
        assert!(a.mul(&ResidueMatrix::identity(8)).is_err());
    }

    #[test]
    fn inverse_examples() {
        assert_eq!(m([3, 0, 0, 7], 16).inv().unwrap(), m([11, 0, 0, 7], 16));
        assert_eq!(m([2, 0, 0, 1], 8).inv(), Err(Error::NotInvertible(8)));
        assert_eq!(ResidueMatrix::identity(4).inv().unwrap(), ResidueMatrix::identity(4));
    }

    #[test]
    fn packed_mul_matches_integer_product() {
        for n in [2u32, 3, 4, 8, 9, 16, 25, 64] {
            let r = MatRing::new(n);
            let mut s = 12345u64;
            for _ in 0..500 {
                let mut next = || {
                    s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                    ((s >> 33) % n as u64) as i64
                };
                let a = [next(), next(), next(), next()];
                let b = [next(), next(), next(), next()];
                let prod = [
                    a[0] * b[0] + a[1] * b[2],
                    a[0] * b[1] + a[1] * b[3],
                    a[2] * b[0] + a[3] * b[2],
                    a[2] * b[1] + a[3] * b[3],
                ];
                assert_eq!(r.mul(r.pack_i64(a), r.pack_i64(b)), r.pack_i64(prod));
                let det = (a[0] * a[3] - a[1] * a[2]).rem_euclid(n as i64) as u32;
                assert_eq!(r.det(r.pack_i64(a)), det);
            }
        }
    }

    #[test]
    fn gl2_order_matches_enumeration() {
        assert_eq!(gl2_order(2).unwrap(), 6);
        for k in 1..=2 {
            let r = MatRing::pow2(k);
            assert_eq!(r.units().count() as u64, gl2_order(1 << k).unwrap());
        }
        assert_eq!(MatRing::new(3).units().count(), 48);
        assert_eq!(gl2_order(32).unwrap(), 393216);
        assert_eq!(gl2_order(9).unwrap(), 3888);
        assert!(gl2_order(12).is_err());
    }

    #[test]
    fn group_closed_mod_2_and_4() {
        for n in [2u32, 4] {
            let r = MatRing::new(n);
            let units: Vec<u32> = r.units().collect();
            for &x in &units {
                let xi = r.inv(x).unwrap();
                assert_eq!(r.mul(x, xi), r.identity());
                for &y in &units {
                    assert!(r.is_unit(r.mul(x, y)));
                }
            }
        }
    }

    #[test]
    fn reduce_and_lift() {
        let big = MatRing::pow2(5);
        let small = MatRing::pow2(2);
        let x = big.pack([29, 3, 6, 17]);
        assert_eq!(small.unpack(big.reduce_to(x, &small)), [1, 3, 2, 1]);
        let y = small.pack([1, 3, 2, 1]);
        let lifts: Vec<u32> = small.lifts(y, &big).collect();
        assert_eq!(lifts.len(), 4096);
        assert!(lifts.contains(&x));
        assert!(lifts.iter().all(|&l| big.reduce_to(l, &small) == y));
        let r9 = MatRing::new(9);
        let r3 = MatRing::new(3);
        assert_eq!(r9.reduce_to(r9.pack([7, 3, 0, 4]), &r3), r3.pack([1, 0, 0, 1]));
    }

    #[test]
    fn projective_line_counts() {
        let p2 = projective_line(2);
        assert_eq!(p2.len(), 3);
        for (x, y) in [(1, 0), (0, 1), (1, 1)] {
            assert!(p2.contains(&ProjectivePoint { modulus: 2, x, y }));
        }
        // brute-force oracle: unimodular pairs / number of units
        for n in [4u32, 8, 16] {
            let nn = n as i64;
            let pairs = (0..nn)
                .flat_map(|x| (0..nn).map(move |y| (x, y)))
                .filter(|&(x, y)| gcd(gcd(x, y), nn) == 1)
                .count();
            let units = (1..nn).filter(|&u| is_unit_mod(u, nn)).count();
            assert_eq!(projective_line(n).len(), pairs / units);
            assert_eq!(projective_line(n).len() as u32, 3 * n / 2);
        }
        assert_eq!(projective_line(9).len(), 12);
    }

    #[test]
    fn projective_action_is_a_right_action() {
        let r = MatRing::new(4);
        let units: Vec<u32> = r.units().collect();
        let pts = projective_line(4);
        for &a in units.iter().step_by(5) {
            for &b in units.iter().step_by(7) {
                let (ma, mb) = (r.to_matrix(a), r.to_matrix(b));
                let ab = ma.mul(&mb).unwrap();
                for p in &pts {
                    assert_eq!(p.act(&ma).unwrap().act(&mb).unwrap(), p.act(&ab).unwrap());
                }
            }
        }
    }

    #[test]
    fn text_round_trip() {
        let a: ResidueMatrix = "[[7, 14], [0, 1]] mod 16".parse().unwrap();
        assert_eq!(a, m([7, 14, 0, 1], 16));
        assert_eq!(a.to_string(), "[[7,14],[0,1]] mod 16");
        assert_eq!(a.to_string().parse::<ResidueMatrix>().unwrap(), a);
        let b: ResidueMatrix = "[[0,-1],[1,0]] mod 4".parse().unwrap();
        assert_eq!(b.entries, [0, 3, 1, 0]);
        assert!("[[1,2],[3]] mod 4".parse::<ResidueMatrix>().is_err());
        assert!("[[1,2],[3,4]] mod 12".parse::<ResidueMatrix>().is_err());
        assert!("[[1,2],[3,4]]".parse::<ResidueMatrix>().is_err());
    }
}
