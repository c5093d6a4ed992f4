//! Odd-order reduction density: the Haar integral of |det(M − I)|₂ over H.
//!
//! Branch and bound over residue classes. A class M mod 2^m is settled once
//! v₂(det(M − I)) < m. The integral over an unsettled class only depends on the
//! Smith type of M − I mod 2^m (left and right multiplication by GL2(Z2)
//! preserves both |det| and Haar measure on M2(Z2)), so unsettled classes are
//! carried as (type, mass) pairs rather than matrices.

use crate::residue::MatRing;
use crate::subgroup::OpenSubgroup;
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};
use std::collections::BTreeMap;

/// Refinement stops at this level exponent even if the tolerance is not met.
pub const DEFAULT_MAX_EXP: u32 = 200;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DensityInterval {
    pub lower: BigRational,
    pub upper: BigRational,
    /// Exponent m of the modulus 2^m reached.
    pub refinement_level: u32,
    pub converged: bool,
}

impl DensityInterval {
    pub fn width(&self) -> BigRational {
        &self.upper - &self.lower
    }

    pub fn contains(&self, x: &BigRational) -> bool {
        &self.lower <= x && x <= &self.upper
    }

    pub fn intersects(&self, o: &DensityInterval) -> bool {
        self.lower <= o.upper && o.lower <= self.upper
    }
}

/// Smith type (a, b) of an integer 2x2 matrix mod 2^m, 0 ≤ a ≤ b ≤ m.
fn smith_type(e: [i128; 4], m: u32) -> (u32, u32) {
    let modulus = 1i128 << m;
    let e = e.map(|x| x.rem_euclid(modulus));
    let v = |x: i128, cap: u32| if x == 0 { cap } else { (x.trailing_zeros()).min(cap) };
    let a = e.iter().map(|&x| v(x, m)).min().unwrap();
    if a == m {
        return (m, m);
    }
    let rest = m - a;
    let sub = 1i128 << rest;
    let d = e.map(|x| (x >> a).rem_euclid(sub));
    let det = (d[0] * d[3] - d[1] * d[2]).rem_euclid(sub);
    (a, (a + v(det, rest)).min(m))
}

type Ty = (u32, u32);

/// Work state at modulus 2^m: settled mass-weighted sum and unsettled types.
pub struct DensityRefiner {
    m: u32,
    settled: BigRational,
    pending: BTreeMap<Ty, BigRational>,
    children: BTreeMap<(Ty, u32), Vec<(Option<u32>, Ty)>>,
}

fn pow2_inv(t: u32) -> BigRational {
    BigRational::new(BigInt::one(), BigInt::one() << t as usize)
}

impl DensityRefiner {
    pub fn new(h: &OpenSubgroup) -> Self {
        let m = h.level_exp().max(1);
        let g = h.reduce(m);
        let r: MatRing = g.ring;
        let n = g.order();
        let mut settled_counts: BTreeMap<u32, u64> = BTreeMap::new();
        let mut pend: BTreeMap<Ty, u64> = BTreeMap::new();
        for &x in &g.elements {
            let [a, b, c, d] = r.unpack(x).map(|v| v as i128);
            let (s, t) = smith_type([a - 1, b, c, d - 1], m);
            if s + t < m {
                *settled_counts.entry(s + t).or_insert(0) += 1;
            } else {
                *pend.entry((s, t)).or_insert(0) += 1;
            }
        }
        let nn = BigInt::from(n);
        let mut settled = BigRational::zero();
        for (t, c) in settled_counts {
            settled += BigRational::new(BigInt::from(c), nn.clone()) * pow2_inv(t);
        }
        let pending = pend.into_iter().map(|(ty, c)| (ty, BigRational::new(BigInt::from(c), nn.clone()))).collect();
        DensityRefiner { m, settled, pending, children: BTreeMap::new() }
    }

    pub fn level(&self) -> u32 {
        self.m
    }

    pub fn unsettled_mass(&self) -> BigRational {
        self.pending.values().fold(BigRational::zero(), |a, b| a + b)
    }

    pub fn interval(&self, converged: bool) -> DensityInterval {
        let upper = &self.settled + self.unsettled_mass() * pow2_inv(self.m);
        DensityInterval { lower: self.settled.clone(), upper, refinement_level: self.m, converged }
    }

    /// The 16 lifts of a class of Smith type `ty` mod 2^m: for each, either
    /// the settled exponent or the new type mod 2^(m+1).
    fn lifts(&mut self, ty: Ty) -> Vec<(Option<u32>, Ty)> {
        let m = self.m;
        self.children
            .entry((ty, m))
            .or_insert_with(|| {
                let base = [1i128 << ty.0, 0, 0, if ty.1 >= m { 0 } else { 1i128 << ty.1 }];
                let step = 1i128 << m;
                (0..16u32)
                    .map(|bits| {
                        let mut e = base;
                        for (i, x) in e.iter_mut().enumerate() {
                            if bits >> i & 1 == 1 {
                                *x += step;
                            }
                        }
                        let (s, t) = smith_type(e, m + 1);
                        if s + t < m + 1 {
                            (Some(s + t), (s, t))
                        } else {
                            (None, (s, t))
                        }
                    })
                    .collect()
            })
            .clone()
    }

    /// Split every unsettled class into its 16 children mod 2^(m+1).
    pub fn step(&mut self) {
        let pending = std::mem::take(&mut self.pending);
        let sixteenth = BigRational::new(BigInt::one(), BigInt::from(16));
        let mut next: BTreeMap<Ty, BigRational> = BTreeMap::new();
        for (ty, mass) in pending {
            let child_mass = &mass * &sixteenth;
            for (settled, cty) in self.lifts(ty) {
                match settled {
                    Some(t) => self.settled += &child_mass * pow2_inv(t),
                    None => *next.entry(cty).or_insert_with(BigRational::zero) += &child_mass,
                }
            }
        }
        self.pending = next;
        self.m += 1;
    }
}

pub fn odd_order_density(h: &OpenSubgroup, tol: &BigRational) -> DensityInterval {
    odd_order_density_capped(h, tol, DEFAULT_MAX_EXP)
}

pub fn odd_order_density_capped(h: &OpenSubgroup, tol: &BigRational, max_exp: u32) -> DensityInterval {
    let mut r = DensityRefiner::new(h);
    loop {
        let iv = r.interval(false);
        if &iv.width() <= tol {
            return DensityInterval { converged: true, ..iv };
        }
        if r.level() >= max_exp {
            return iv;
        }
        r.step();
    }
}

/// Parse a tolerance such as `1e-4`, `0.001` or `1/1000` into an exact rational.
pub fn parse_tolerance(s: &str) -> Option<BigRational> {
    let s = s.trim();
    let q = if let Some((n, d)) = s.split_once('/') {
        let n: BigInt = n.trim().parse().ok()?;
        let d: BigInt = d.trim().parse().ok()?;
        if d.is_zero() {
            return None;
        }
        BigRational::new(n, d)
    } else {
        let (mant, exp) = match s.split_once(['e', 'E']) {
            Some((m, e)) => (m, e.parse::<i32>().ok()?),
            None => (s, 0),
        };
        let (ip, fp) = mant.split_once('.').unwrap_or((mant, ""));
        if ip.is_empty() && fp.is_empty() {
            return None;
        }
        let digits: BigInt = format!("{ip}{fp}").parse().ok()?;
        let scale = exp - fp.len() as i32;
        if scale.unsigned_abs() > 1000 {
            return None;
        }
        let ten = BigInt::from(10);
        if scale >= 0 {
            BigRational::from_integer(digits * num_traits::pow(ten, scale as usize))
        } else {
            BigRational::new(digits, num_traits::pow(ten, (-scale) as usize))
        }
    };
    (q > BigRational::zero()).then_some(q)
}

pub fn density_report(lat: &crate::tower::TowerLattice, tol: &BigRational) -> Vec<(usize, DensityInterval)> {
    lat.listed().map(|n| (n.id, odd_order_density(&n.subgroup, tol))).collect()
}

/// Which subgroup an extreme value was attained on.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum DensitySource {
    Node(usize),
    /// The i-th −I-free index-2 subgroup of a node.
    MinusIdentityFree { parent: usize, index: usize },
}

#[derive(Clone, Debug)]
pub struct DensityExtremes {
    pub considered: usize,
    pub max: (DensitySource, DensityInterval),
    pub min: (DensitySource, DensityInterval),
}

/// Extremes of the density over the listed nodes with rational points and
/// the −I-free subgroups of flagged nodes. With `flags = None` every listed
/// node and every −I-free index-2 subgroup of a genus-0 node is included.
pub fn density_extremes(
    lat: &crate::tower::TowerLattice,
    flags: Option<&[crate::tower::PointFlag]>,
    tol: &BigRational,
) -> Option<DensityExtremes> {
    use crate::tower::fingerprint_hex;
    let marked = |n: &crate::tower::TowerNode| match flags {
        None => true,
        Some(f) => {
            let fp = fingerprint_hex(n.subgroup.fingerprint());
            f.iter().any(|x| x.has_rational_point && x.fingerprint.trim_start_matches("0x").eq_ignore_ascii_case(&fp))
        }
    };
    let mut all: Vec<(DensitySource, DensityInterval)> = Vec::new();
    for n in lat.listed() {
        let pts = marked(n);
        if pts {
            all.push((DensitySource::Node(n.id), odd_order_density(&n.subgroup, tol)));
        }
        if pts && n.invariants.genus == 0 {
            for (i, k) in crate::maximal::minus_identity_free_index2_subgroups(&n.subgroup).iter().enumerate() {
                all.push((DensitySource::MinusIdentityFree { parent: n.id, index: i }, odd_order_density(k, tol)));
            }
        }
    }
    let max = all.iter().max_by(|a, b| (&a.1.lower + &a.1.upper).cmp(&(&b.1.lower + &b.1.upper)))?.clone();
    let min = all.iter().min_by(|a, b| (&a.1.lower + &a.1.upper).cmp(&(&b.1.lower + &b.1.upper)))?.clone();
    Some(DensityExtremes { considered: all.len(), max, min })
}

pub fn report_csv(rows: &[(usize, DensityInterval)]) -> String {
    let mut s = String::from("node_id,lower,upper\n");
    for (id, iv) in rows {
        s.push_str(&format!("{id},{},{}\n", iv.lower, iv.upper));
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(n: i64, d: i64) -> BigRational {
        BigRational::new(n.into(), d.into())
    }

    #[test]
    fn smith_types() {
        assert_eq!(smith_type([0, 0, 0, 0], 3), (3, 3));
        assert_eq!(smith_type([2, 0, 0, 4], 3), (1, 2));
        assert_eq!(smith_type([1, 0, 0, 8], 3), (0, 3));
        assert_eq!(smith_type([2, 2, 2, 2], 4), (1, 4));
        assert_eq!(smith_type([1, 1, 1, -1], 5), (0, 1));
    }

    #[test]
    fn full_group_brackets_11_21() {
        let iv = odd_order_density(&OpenSubgroup::full(), &q(1, 10_000));
        assert!(iv.converged);
        assert!(iv.contains(&q(11, 21)), "{iv:?}");
    }

    #[test]
    fn nesting_and_mass() {
        let mut r = DensityRefiner::new(&OpenSubgroup::full());
        let mut prev = r.interval(false);
        for _ in 0..12 {
            r.step();
            let cur = r.interval(false);
            assert!(cur.lower >= prev.lower && cur.upper <= prev.upper);
            prev = cur;
        }
    }

    #[test]
    fn tolerance_parsing() {
        assert_eq!(parse_tolerance("1e-4"), Some(q(1, 10_000)));
        assert_eq!(parse_tolerance("0.25"), Some(q(1, 4)));
        assert_eq!(parse_tolerance("3/8"), Some(q(3, 8)));
        assert_eq!(parse_tolerance("0"), None);
        assert_eq!(parse_tolerance("-1"), None);
        assert_eq!(parse_tolerance("x"), None);
    }
}
