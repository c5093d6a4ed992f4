//! Open subgroups of GL2(Z2), stored as their reduction at the minimal level.

use crate::error::{Error, Result};
use crate::group::{reduce_elements, transporter, FiniteGroup, Ladder};
use crate::residue::{gl2_order, parse_entries, v2, MatRing, ResidueMatrix};
use serde::{Deserialize, Serialize};
use std::collections::HashMap;
use std::fmt::Write as _;
use std::sync::{Mutex, OnceLock};

/// Largest level exponent handled by the packed representation.
pub const MAX_LEVEL_EXP: u32 = 8;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SubgroupPredicates {
    pub det_surjective: bool,
    pub contains_minus_identity: bool,
    pub has_trace0_detm1: bool,
    pub has_refined_cc_element: bool,
}

/// Conjugation-invariant summary used to pre-filter transporter searches.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ConjKey {
    pub level_exp: u32,
    pub order: usize,
    pub histogram: u64,
}

#[derive(Debug)]
pub struct OpenSubgroup {
    k: u32,
    group: FiniteGroup,
    fingerprint: u64,
    ladder: OnceLock<Ladder>,
    key: OnceLock<ConjKey>,
    class_counts: OnceLock<HashMap<u32, u32>>,
}

impl Clone for OpenSubgroup {
    fn clone(&self) -> Self {
        Self::with_group(self.k, self.group.clone())
    }
}

impl PartialEq for OpenSubgroup {
    fn eq(&self, other: &Self) -> bool {
        self.k == other.k && self.group.elements == other.group.elements
    }
}

impl Eq for OpenSubgroup {}

pub(crate) fn fnv1a(words: impl IntoIterator<Item = u32>) -> u64 {
    let mut h: u64 = 0xcbf29ce484222325;
    for w in words {
        for b in w.to_le_bytes() {
            h ^= b as u64;
            h = h.wrapping_mul(0x100000001b3);
        }
    }
    h
}

/// Invariant of an element under conjugation: (det, trace, v2 of the
/// non-scalar part), packed.
#[inline]
fn class_invariant(r: &MatRing, x: u32) -> u32 {
    let [a, b, c, d] = r.unpack(x);
    let m = r.modulus();
    let k = r.exponent();
    let am = (a + m - d) % m.max(1);
    let j = v2(b as u64, k).min(v2(c as u64, k)).min(v2(am as u64, k));
    r.det(x) | r.trace(x) << 8 | j << 16
}

impl OpenSubgroup {
    fn with_group(k: u32, group: FiniteGroup) -> Self {
        let fingerprint = fnv1a(std::iter::once(k).chain(group.elements.iter().copied()));
        OpenSubgroup {
            k,
            group,
            fingerprint,
            ladder: OnceLock::new(),
            key: OnceLock::new(),
            class_counts: OnceLock::new(),
        }
    }

    /// GL2(Z2) itself.
    pub fn full() -> Self {
        let r = MatRing::new(1);
        Self::with_group(0, FiniteGroup { ring: r, elements: vec![0], generators: vec![] })
    }

    /// The open subgroup whose reduction mod 2^m is `group`; re-normalized to
    /// the minimal level.
    pub fn from_group(group: FiniteGroup) -> Self {
        let m = group.ring.exponent();
        let n = group.order();
        for j in 0..=m {
            let rj = MatRing::pow2(j);
            let red = if j == m { group.elements.clone() } else { reduce_elements(&group.ring, &group.elements, &rj) };
            let kernel = gl2_order(1 << m).unwrap() / gl2_order(1 << j).unwrap();
            if red.len() as u64 * kernel == n as u64 {
                if j == m {
                    return Self::with_group(m, group);
                }
                let gens: Vec<u32> = group.generators.iter().map(|&g| group.ring.reduce_to(g, &rj)).collect();
                let gens = crate::group::generators_of(&rj, &red, &gens);
                let gens = prune_generators(&rj, &red, gens);
                return Self::with_group(j, FiniteGroup { ring: rj, elements: red, generators: gens });
            }
        }
        unreachable!("level m always qualifies")
    }

    /// Close the generators at their common modulus 2^m (the subgroup is the
    /// full preimage of the closure) and normalize the level.
    pub fn from_generators(gens: &[ResidueMatrix]) -> Result<Self> {
        let Some(first) = gens.first() else {
            return Ok(Self::full());
        };
        let m = first.modulus;
        Self::from_generators_at(gens, m)
    }

    pub fn from_generators_at(gens: &[ResidueMatrix], modulus: u32) -> Result<Self> {
        if !modulus.is_power_of_two() || modulus.trailing_zeros() > MAX_LEVEL_EXP {
            return Err(Error::InvalidModulus(modulus));
        }
        let r = MatRing::new(modulus);
        let mut packed = Vec::with_capacity(gens.len());
        for g in gens {
            if g.modulus != modulus {
                return Err(Error::ModulusMismatch(modulus, g.modulus));
            }
            if !g.is_unit() {
                return Err(Error::NotInvertible(modulus));
            }
            packed.push(g.packed());
        }
        Ok(Self::from_group(FiniteGroup::closure(r, &packed)))
    }

    pub fn level(&self) -> u32 {
        1 << self.k
    }

    pub fn level_exp(&self) -> u32 {
        self.k
    }

    pub fn ring(&self) -> MatRing {
        self.group.ring
    }

    pub fn group(&self) -> &FiniteGroup {
        &self.group
    }

    pub fn elements(&self) -> &[u32] {
        &self.group.elements
    }

    pub fn order(&self) -> usize {
        self.group.order()
    }

    pub fn fingerprint(&self) -> u64 {
        self.fingerprint
    }

    pub fn generators(&self) -> Vec<ResidueMatrix> {
        self.group.generators.iter().map(|&g| self.group.ring.to_matrix(g)).collect()
    }

    pub fn index(&self) -> u64 {
        gl2_order(self.level()).unwrap() / self.order() as u64
    }

    /// Reduction mod 2^m, lifting when 2^m exceeds the level.
    pub fn reduce(&self, m: u32) -> FiniteGroup {
        let target = MatRing::pow2(m);
        if m <= self.k {
            self.group.reduce(target)
        } else {
            self.group.lift(target)
        }
    }

    /// Full preimage mod 2^m.
    pub fn lift(&self, m: u32) -> Result<FiniteGroup> {
        if m > MAX_LEVEL_EXP {
            return Err(Error::InvalidModulus(u32::MAX));
        }
        if m < self.k {
            return Err(Error::LiftBelowLevel { level: self.level(), target: 1 << m });
        }
        Ok(self.group.lift(MatRing::pow2(m)))
    }

    pub fn ladder(&self) -> &Ladder {
        self.ladder.get_or_init(|| Ladder::new(&self.group.ring, &self.group.elements))
    }

    fn class_counts(&self) -> &HashMap<u32, u32> {
        self.class_counts.get_or_init(|| {
            let r = self.group.ring;
            let mut h = HashMap::new();
            for &x in &self.group.elements {
                *h.entry(class_invariant(&r, x)).or_insert(0) += 1;
            }
            h
        })
    }

    pub fn conj_key(&self) -> ConjKey {
        *self.key.get_or_init(|| {
            let mut v: Vec<(u32, u32)> = self.class_counts().iter().map(|(&a, &b)| (a, b)).collect();
            v.sort_unstable();
            ConjKey {
                level_exp: self.k,
                order: self.order(),
                histogram: fnv1a(v.into_iter().flat_map(|(a, b)| [a, b])),
            }
        })
    }

    pub fn predicates(&self) -> SubgroupPredicates {
        predicates_of(&self.group)
    }

    pub fn contains_minus_identity(&self) -> bool {
        self.group.contains(self.group.ring.minus_identity())
    }

    /// Some g with g·H·g⁻¹ = K, as a matrix mod the common level.
    pub fn is_conjugate(&self, other: &OpenSubgroup) -> Option<ResidueMatrix> {
        if self.k != other.k || self.order() != other.order() {
            return None;
        }
        if self.conj_key() != other.conj_key() {
            return None;
        }
        let memo_key = (self.fingerprint, other.fingerprint);
        if let Some(&false) = memo().lock().unwrap().get(&memo_key) {
            return None;
        }
        let found = transporter(&self.group.generators, other.ladder(), false).first().copied();
        memo().lock().unwrap().insert(memo_key, found.is_some());
        found.map(|g| self.group.ring.to_matrix(g))
    }

    /// Some g with g·H·g⁻¹ ⊆ K (containment up to conjugacy). Works at
    /// level(K), which suffices because K is a full preimage there.
    pub fn conjugate_into(&self, k: &OpenSubgroup) -> Option<ResidueMatrix> {
        if self.index() % k.index() != 0 {
            return None;
        }
        let target = k.ring();
        let h_red = if self.k >= k.k {
            self.group.reduce(target)
        } else {
            self.group.lift(target)
        };
        // each invariant class of H (mod level K) must fit into K's
        let r = target;
        let mut counts: HashMap<u32, u32> = HashMap::new();
        for &x in &h_red.elements {
            *counts.entry(class_invariant(&r, x)).or_insert(0) += 1;
        }
        let kc = k.class_counts();
        if counts.iter().any(|(c, &n)| kc.get(c).copied().unwrap_or(0) < n) {
            return None;
        }
        transporter(&h_red.generators, k.ladder(), false).first().map(|&g| r.to_matrix(g))
    }

    /// [GL2(Z2) : N(H)] computed at the level.
    pub fn count_ambient_conjugates(&self) -> u64 {
        let sols = transporter(&self.group.generators, self.ladder(), true);
        gl2_order(self.level()).unwrap() / sols.len() as u64
    }

    /// Conjugacy classes of the full preimage mod 2^m (m is the exponent).
    pub fn conjugacy_classes(&self, m: u32) -> Result<Vec<(ResidueMatrix, usize)>> {
        let g = self.lift(m)?;
        Ok(g.conjugacy_classes().into_iter().map(|(x, s)| (g.ring.to_matrix(x), s)).collect())
    }

    pub fn adjoin_minus_identity(&self) -> OpenSubgroup {
        if self.contains_minus_identity() {
            return self.clone();
        }
        let r = self.group.ring;
        let mut gens = self.group.generators.clone();
        gens.push(r.minus_identity());
        Self::from_group(FiniteGroup::closure(r, &gens))
    }

    pub fn transpose(&self) -> OpenSubgroup {
        let r = self.group.ring;
        let mut elements: Vec<u32> = self.group.elements.iter().map(|&x| r.transpose(x)).collect();
        elements.sort_unstable();
        let generators = self.group.generators.iter().map(|&x| r.transpose(x)).collect();
        Self::with_group(self.k, FiniteGroup { ring: r, elements, generators })
    }

    /// g·H·g⁻¹ for g given mod a multiple of the level.
    pub fn conjugate_by(&self, g: &ResidueMatrix) -> Result<OpenSubgroup> {
        let r = self.group.ring;
        let g = g.reduce(r.modulus())?;
        if !g.is_unit() {
            return Err(Error::NotInvertible(g.modulus));
        }
        Ok(Self::with_group(self.k, self.group.conjugate_by(g.packed())))
    }

    pub fn contains_subgroup(&self, other: &OpenSubgroup) -> bool {
        if other.k < self.k {
            let l = other.group.lift(self.group.ring);
            return l.elements.iter().all(|&x| self.group.contains(x));
        }
        let red = other.group.reduce(self.group.ring);
        red.elements.iter().all(|&x| self.group.contains(x))
    }

    pub fn to_text(&self) -> String {
        let mut s = format!("level={}\n", self.level());
        for g in self.generators() {
            let _ = writeln!(s, "{g}");
        }
        s
    }

    pub fn to_json(&self) -> SubgroupJson {
        SubgroupJson {
            level: self.level(),
            generators: self.group.generators.iter().map(|&g| self.group.ring.unpack(g)).collect(),
        }
    }
}

/// Drop generators that are redundant given the others (greedy, in order).
fn prune_generators(r: &MatRing, elements: &[u32], gens: Vec<u32>) -> Vec<u32> {
    let mut c = crate::group::Closure::new(*r);
    let mut out = Vec::new();
    for g in gens {
        if c.extend(g) {
            out.push(g);
        }
        if c.len() == elements.len() {
            break;
        }
    }
    out
}

fn memo() -> &'static Mutex<HashMap<(u64, u64), bool>> {
    static MEMO: OnceLock<Mutex<HashMap<(u64, u64), bool>>> = OnceLock::new();
    MEMO.get_or_init(|| Mutex::new(HashMap::new()))
}

/// The four predicate flags of a finite group at modulus 2^k, read as the
/// open subgroup it defines.
pub fn predicates_of(g: &FiniteGroup) -> SubgroupPredicates {
    let r = g.ring;
    let m = r.modulus();
    if m == 1 {
        return SubgroupPredicates {
            det_surjective: true,
            contains_minus_identity: true,
            has_trace0_detm1: true,
            has_refined_cc_element: true,
        };
    }
    let mut dets = vec![false; m as usize];
    let mut t0 = false;
    let mut refined = false;
    let minus_one = m - 1;
    let id = r.identity();
    for &x in &g.elements {
        dets[r.det(x) as usize] = true;
        if r.det(x) == minus_one && r.trace(x) == 0 {
            t0 = true;
            if !refined && r.mul(x, x) == id {
                refined = has_primitive_fixed_vector(&r, x);
            }
        }
    }
    SubgroupPredicates {
        det_surjective: dets.iter().filter(|&&b| b).count() as u32 == m / 2,
        contains_minus_identity: g.contains(r.minus_identity()),
        has_trace0_detm1: t0,
        has_refined_cc_element: refined,
    }
}

/// Whether some row vector of additive order m is fixed by v -> v·x.
fn has_primitive_fixed_vector(r: &MatRing, x: u32) -> bool {
    // fixed vectors are stable under unit scaling, so P^1 representatives suffice
    let m = r.modulus();
    let cands = (0..m).map(|y| (1, y)).chain((0..m).step_by(2).map(|x| (x, 1)));
    for v in cands {
        if r.act_row(v, x) == v {
            return true;
        }
    }
    false
}

/// Exact (2-adic) version of the trace-0/det-−1 test: some element of the
/// open subgroup has det exactly −1 and trace exactly 0.
pub fn has_exact_trace0_detm1(g: &FiniteGroup) -> bool {
    let r = g.ring;
    let m = r.modulus();
    if m <= 2 {
        // mod 2 a lift always exists once the residue condition holds: the
        // conditions det = -1, tr = 0 are implied by [[1,0],[0,-1]]-type lifts
        return g.elements.iter().any(|&x| r.det(x) == (m - 1) % m && r.trace(x) == 0) || m == 1;
    }
    let mm = m as u64;
    g.elements.iter().any(|&x| {
        if r.det(x) != m - 1 || r.trace(x) != 0 {
            return false;
        }
        let [a, b, c, _] = r.unpack(x).map(|v| v as u64);
        if b % 2 == 1 || c % 2 == 1 {
            return true;
        }
        (a * a + b * c) % (2 * mm) == 1
    })
}

/// JSON form of a subgroup: level (the modulus 2^k) and row-major generators.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SubgroupJson {
    pub level: u32,
    pub generators: Vec<[u32; 4]>,
}

impl SubgroupJson {
    pub fn to_subgroup(&self) -> Result<OpenSubgroup> {
        let lvl = self.level;
        if lvl == 0 || !lvl.is_power_of_two() || lvl > 1 << MAX_LEVEL_EXP {
            return Err(Error::InvalidModulus(lvl));
        }
        let gens = self
            .generators
            .iter()
            .map(|e| ResidueMatrix::new(e.map(|x| x as i64), lvl))
            .collect::<Result<Vec<_>>>()?;
        OpenSubgroup::from_generators_at(&gens, lvl)
    }
}

/// Parse either the JSON form or the text form (`level=2^k` then one
/// generator per line).
pub fn parse_subgroup(s: &str) -> Result<OpenSubgroup> {
    let t = s.trim_start();
    if t.starts_with('{') {
        return parse_subgroup_json(t);
    }
    parse_subgroup_text(s)
}

pub fn parse_subgroup_json(s: &str) -> Result<OpenSubgroup> {
    let j: SubgroupJson = serde_json::from_str(s)?;
    j.to_subgroup()
}

pub fn parse_level(s: &str) -> Result<u32> {
    let bad = || Error::Parse(format!("bad level {s:?}"));
    let s = s.trim();
    let v = if let Some(e) = s.strip_prefix("2^") {
        let e: u32 = e.trim().parse().map_err(|_| bad())?;
        if e > MAX_LEVEL_EXP {
            return Err(Error::InvalidModulus(u32::MAX));
        }
        1u32 << e
    } else {
        s.parse().map_err(|_| bad())?
    };
    if v == 0 || !v.is_power_of_two() || v > 1 << MAX_LEVEL_EXP {
        return Err(Error::InvalidModulus(v));
    }
    Ok(v)
}

pub fn parse_subgroup_text(s: &str) -> Result<OpenSubgroup> {
    let mut lines = s.lines().map(str::trim).filter(|l| !l.is_empty() && !l.starts_with('#'));
    let first = lines.next().ok_or_else(|| Error::Parse("empty subgroup text".into()))?;
    let lvl = first
        .strip_prefix("level")
        .and_then(|r| r.trim_start().strip_prefix('='))
        .ok_or_else(|| Error::Parse(format!("expected level=2^k, got {first:?}")))?;
    let lvl = parse_level(lvl)?;
    let mut gens = Vec::new();
    for line in lines {
        let (mat, m) = match line.rsplit_once("mod") {
            Some((a, b)) => (a, Some(b)),
            None => (line, None),
        };
        if let Some(m) = m {
            let m: u32 = m.trim().parse().map_err(|_| Error::Parse(format!("bad modulus in {line:?}")))?;
            if m != lvl {
                return Err(Error::ModulusMismatch(lvl, m));
            }
        }
        gens.push(ResidueMatrix::new(parse_entries(mat)?, lvl)?);
    }
    OpenSubgroup::from_generators_at(&gens, lvl)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sub(gens: &[[i64; 4]], m: u32) -> OpenSubgroup {
        let g: Vec<_> = gens.iter().map(|&e| ResidueMatrix::new(e, m).unwrap()).collect();
        OpenSubgroup::from_generators_at(&g, m).unwrap()
    }

    #[test]
    fn full_group_basics() {
        let f = OpenSubgroup::full();
        assert_eq!(f.level(), 1);
        assert_eq!(f.index(), 1);
        let p = f.predicates();
        assert!(p.det_surjective && p.contains_minus_identity && p.has_trace0_detm1 && p.has_refined_cc_element);
        // the full group given mod 8 normalizes to level 1
        let r = MatRing::new(8);
        let g = OpenSubgroup::from_group(FiniteGroup::full(r));
        assert_eq!(g.level(), 1);
        assert_eq!(g, f);
    }

    #[test]
    fn level_normalization_round_trip() {
        // Borel mod 4 given at modulus 16 via its full preimage
        let r4 = MatRing::new(4);
        let borel: Vec<u32> = r4.units().filter(|&x| r4.unpack(x)[2] == 0).collect();
        let b = FiniteGroup::from_elements(r4, borel);
        let lifted = b.lift(MatRing::new(16));
        assert_eq!(lifted.order(), b.order() * 256);
        let h = OpenSubgroup::from_group(lifted);
        assert_eq!(h.level(), 4);
        assert_eq!(h.elements(), &b.elements[..]);
    }

    #[test]
    fn index_and_order_identity() {
        let h = sub(&[[7, 14, 0, 1], [1, 5, 6, 11], [3, 0, 0, 7]], 16);
        assert_eq!(h.order() as u64 * h.index(), gl2_order(h.level()).unwrap());
    }

    #[test]
    fn conjugation_found_for_random_conjugate() {
        let h = sub(&[[7, 14, 0, 1], [1, 5, 6, 11], [3, 0, 0, 7]], 16);
        let g = ResidueMatrix::new([3, 5, 2, 7], h.level()).unwrap();
        let k = h.conjugate_by(&g).unwrap();
        let c = h.is_conjugate(&k).expect("conjugate");
        assert_eq!(h.conjugate_by(&c).unwrap(), k);
        assert!(h.is_conjugate(&h).is_some());
    }

    #[test]
    fn transpose_is_involution() {
        let h = sub(&[[7, 14, 0, 1], [1, 5, 6, 11], [3, 0, 0, 7]], 16);
        let t = h.transpose();
        assert_eq!(t.transpose(), h);
        assert_eq!(t.index(), h.index());
        assert_eq!(t.level(), h.level());
        assert_eq!(t.predicates(), h.predicates());
    }

    #[test]
    fn adjoin_minus_identity_idempotent() {
        let h = sub(&[[7, 14, 0, 1], [1, 5, 6, 11], [3, 0, 0, 7]], 16);
        let a = h.adjoin_minus_identity();
        assert!(a.contains_minus_identity());
        assert_eq!(a.adjoin_minus_identity(), a);
    }

    #[test]
    fn normal_subgroup_has_one_conjugate() {
        let r = MatRing::new(4);
        let g = FiniteGroup::closure(r, &[r.minus_identity()]);
        let h = OpenSubgroup::from_group(g);
        assert_eq!(h.count_ambient_conjugates(), 1);
        assert_eq!(OpenSubgroup::full().count_ambient_conjugates(), 1);
    }

    #[test]
    fn text_and_json_round_trip() {
        let h = sub(&[[7, 14, 0, 1], [1, 5, 6, 11], [3, 0, 0, 7]], 16);
        let t = h.to_text();
        assert_eq!(parse_subgroup(&t).unwrap(), h);
        let j = serde_json::to_string(&h.to_json()).unwrap();
        assert_eq!(parse_subgroup(&j).unwrap(), h);
        let src = "level=2^4\n[[7,14],[0,1]] mod 16\n[[1,5],[6,11]]\n[[3,0],[0,7]] mod 16\n";
        assert_eq!(parse_subgroup(src).unwrap(), h);
        assert!(parse_subgroup("level=12\n").is_err());
        assert!(parse_subgroup("level=2^4\n[[1,0],[0,1]] mod 8").is_err());
        assert!(parse_subgroup("level=2^4\n[[2,0],[0,1]] mod 16").is_err());
    }

    #[test]
    fn exact_trace_test_rejects_non_liftable_residue() {
        // diag(3,5) mod 8 has trace 0 and det -1 mod 8 but eigenvalues 3, 5
        let r = MatRing::new(8);
        let g = FiniteGroup::closure(r, &[r.pack([3, 0, 0, 5])]);
        assert!(predicates_of(&g).has_trace0_detm1);
        assert!(!has_exact_trace0_detm1(&g));
        let g2 = FiniteGroup::closure(r, &[r.pack([1, 0, 0, 7])]);
        assert!(has_exact_trace0_detm1(&g2));
    }
}
