//! Finite matrix groups stored as sorted packed element lists.

use crate::residue::MatRing;
use std::collections::{HashMap, HashSet};

/// Packed-code spaces up to this size use a dense bitset.
const DENSE_LIMIT: usize = 1 << 26;

/// Membership structure over packed codes.
#[derive(Clone, Debug)]
pub enum MemberSet {
    Bits(Vec<u64>),
    Hash(HashSet<u32>),
}

impl MemberSet {
    pub fn empty(ring: &MatRing) -> Self {
        let n = ring.space_size();
        if n <= DENSE_LIMIT {
            MemberSet::Bits(vec![0; n.div_ceil(64)])
        } else {
            MemberSet::Hash(HashSet::new())
        }
    }

    pub fn from_elements(ring: &MatRing, elems: &[u32]) -> Self {
        let mut s = Self::empty(ring);
        for &x in elems {
            s.insert(x);
        }
        s
    }

    #[inline]
    pub fn contains(&self, x: u32) -> bool {
        match self {
            MemberSet::Bits(b) => b[(x >> 6) as usize] >> (x & 63) & 1 == 1,
            MemberSet::Hash(h) => h.contains(&x),
        }
    }

    /// Returns true when `x` was not present.
    #[inline]
    pub fn insert(&mut self, x: u32) -> bool {
        match self {
            MemberSet::Bits(b) => {
                let w = &mut b[(x >> 6) as usize];
                let bit = 1u64 << (x & 63);
                let fresh = *w & bit == 0;
                *w |= bit;
                fresh
            }
            MemberSet::Hash(h) => h.insert(x),
        }
    }
}

/// Incremental subgroup closure (Dimino's coset extension).
pub struct Closure {
    pub ring: MatRing,
    pub elems: Vec<u32>,
    pub gens: Vec<u32>,
    set: MemberSet,
}

impl Closure {
    pub fn new(ring: MatRing) -> Self {
        let mut set = MemberSet::empty(&ring);
        let id = ring.identity();
        set.insert(id);
        Closure { ring, elems: vec![id], gens: Vec::new(), set }
    }

    pub fn from_gens(ring: MatRing, gens: &[u32]) -> Self {
        let mut c = Self::new(ring);
        for &g in gens {
            c.extend(g);
        }
        c
    }

    #[inline]
    pub fn contains(&self, x: u32) -> bool {
        self.set.contains(x)
    }

    pub fn len(&self) -> usize {
        self.elems.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elems.is_empty()
    }

    /// Add `g` to the group; returns false if it was already a member.
    pub fn extend(&mut self, g: u32) -> bool {
        if self.set.contains(g) {
            return false;
        }
        let r = self.ring;
        let s_len = self.elems.len();
        self.gens.push(g);
        let mut reps = vec![r.identity()];
        let mut i = 0;
        while i < reps.len() {
            let rep = reps[i];
            i += 1;
            for gi in 0..self.gens.len() {
                let y = r.mul(rep, self.gens[gi]);
                if !self.set.contains(y) {
                    for j in 0..s_len {
                        let z = r.mul(self.elems[j], y);
                        self.set.insert(z);
                        self.elems.push(z);
                    }
                    reps.push(y);
                }
            }
        }
        true
    }

    pub fn into_group(self) -> FiniteGroup {
        let mut elements = self.elems;
        elements.sort_unstable();
        FiniteGroup { ring: self.ring, elements, generators: self.gens }
    }
}

/// A finite subgroup of GL2(Z/m).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FiniteGroup {
    pub ring: MatRing,
    /// Sorted packed elements.
    pub elements: Vec<u32>,
    pub generators: Vec<u32>,
}

impl FiniteGroup {
    pub fn closure(ring: MatRing, gens: &[u32]) -> Self {
        Closure::from_gens(ring, gens).into_group()
    }

    /// Build from a sorted-or-not element list that is known to be a group;
    /// generators are found by incremental extension.
    pub fn from_elements(ring: MatRing, mut elements: Vec<u32>) -> Self {
        elements.sort_unstable();
        elements.dedup();
        let generators = generators_of(&ring, &elements, &[]);
        FiniteGroup { ring, elements, generators }
    }

    pub fn full(ring: MatRing) -> Self {
        Self::from_elements(ring, ring.units().collect())
    }

    pub fn order(&self) -> usize {
        self.elements.len()
    }

    #[inline]
    pub fn contains(&self, x: u32) -> bool {
        self.elements.binary_search(&x).is_ok()
    }

    pub fn member_set(&self) -> MemberSet {
        MemberSet::from_elements(&self.ring, &self.elements)
    }

    pub fn is_subset_of(&self, other: &FiniteGroup) -> bool {
        self.ring == other.ring && self.elements.iter().all(|&x| other.contains(x))
    }

    /// Image under reduction to a ring whose modulus divides ours.
    pub fn reduce(&self, target: MatRing) -> FiniteGroup {
        let elements = reduce_elements(&self.ring, &self.elements, &target);
        let generators = self.generators.iter().map(|&g| self.ring.reduce_to(g, &target)).collect();
        FiniteGroup { ring: target, elements, generators }
    }

    /// Full preimage in a ring whose modulus is a multiple of ours.
    pub fn lift(&self, target: MatRing) -> FiniteGroup {
        if self.ring.modulus() == 1 {
            return FiniteGroup::full(target);
        }
        let mut elements: Vec<u32> =
            self.elements.iter().flat_map(|&x| self.ring.lifts(x, &target)).collect();
        elements.sort_unstable();
        let mut generators: Vec<u32> =
            self.generators.iter().map(|&g| self.ring.lifts(g, &target).next().unwrap()).collect();
        generators.extend(kernel_generators(&self.ring, &target));
        let generators = generators_of(&target, &elements, &generators);
        FiniteGroup { ring: target, elements, generators }
    }

    pub fn conjugate_by(&self, g: u32) -> FiniteGroup {
        let r = self.ring;
        let gi = r.inv(g).expect("unit conjugator");
        let conj = |x: u32| r.mul(r.mul(g, x), gi);
        let mut elements: Vec<u32> = self.elements.iter().map(|&x| conj(x)).collect();
        elements.sort_unstable();
        FiniteGroup { ring: r, elements, generators: self.generators.iter().map(|&x| conj(x)).collect() }
    }

    /// Conjugacy classes as (minimal representative, size), sorted by representative.
    pub fn conjugacy_classes(&self) -> Vec<(u32, usize)> {
        let r = self.ring;
        let conj: Vec<(u32, u32)> =
            self.generators.iter().map(|&g| (g, r.inv(g).unwrap())).collect();
        let mut seen = vec![false; self.elements.len()];
        let mut out = Vec::new();
        for start in 0..self.elements.len() {
            if seen[start] {
                continue;
            }
            seen[start] = true;
            let mut stack = vec![self.elements[start]];
            let mut size = 0;
            let mut rep = u32::MAX;
            while let Some(x) = stack.pop() {
                size += 1;
                rep = rep.min(x);
                for &(g, gi) in &conj {
                    let y = r.mul(r.mul(g, x), gi);
                    let i = self.elements.binary_search(&y).expect("closed under conjugation");
                    if !seen[i] {
                        seen[i] = true;
                        stack.push(y);
                    }
                }
            }
            out.push((rep, size));
        }
        out.sort_unstable();
        out
    }

    /// Map from element to index of its conjugacy class in `conjugacy_classes()`.
    pub fn class_map(&self) -> (Vec<(u32, usize)>, HashMap<u32, usize>) {
        let classes = self.conjugacy_classes();
        let r = self.ring;
        let index_of_rep: HashMap<u32, usize> =
            classes.iter().enumerate().map(|(i, &(rep, _))| (rep, i)).collect();
        let mut map = HashMap::with_capacity(self.elements.len());
        let conj: Vec<(u32, u32)> =
            self.generators.iter().map(|&g| (g, r.inv(g).unwrap())).collect();
        for &(rep, _) in &classes {
            let idx = index_of_rep[&rep];
            map.insert(rep, idx);
            let mut stack = vec![rep];
            while let Some(x) = stack.pop() {
                for &(g, gi) in &conj {
                    let y = r.mul(r.mul(g, x), gi);
                    if let std::collections::hash_map::Entry::Vacant(e) = map.entry(y) {
                        e.insert(idx);
                        stack.push(y);
                    }
                }
            }
        }
        (classes, map)
    }
}

/// Reduce and dedup a list of packed elements.
pub fn reduce_elements(from: &MatRing, elems: &[u32], to: &MatRing) -> Vec<u32> {
    let mut out: Vec<u32> = elems.iter().map(|&x| from.reduce_to(x, to)).collect();
    out.sort_unstable();
    out.dedup();
    out
}

/// Generators of the kernel of reduction from `target` down to `base`
/// (together with the group's own lifted generators they generate the
/// full preimage; `generators_of` completes them if needed).
pub fn kernel_generators(base: &MatRing, target: &MatRing) -> Vec<u32> {
    let m = base.modulus();
    if m == target.modulus() {
        return Vec::new();
    }
    let mut out = Vec::new();
    for i in 0..4 {
        let mut e = [1u32, 0, 0, 1];
        e[i] += m;
        let e = e.map(|x| x % target.modulus());
        let x = target.pack(e);
        if target.is_unit(x) {
            out.push(x);
        }
    }
    out
}

/// A generating set of the group with the given (sorted) element list,
/// starting from `seed` (which must lie in the group).
pub fn generators_of(ring: &MatRing, elements: &[u32], seed: &[u32]) -> Vec<u32> {
    let mut c = Closure::new(*ring);
    for &g in seed {
        c.extend(g);
    }
    if c.len() < elements.len() {
        for &x in elements {
            if c.extend(x) && c.len() == elements.len() {
                break;
            }
        }
    }
    debug_assert_eq!(c.len(), elements.len());
    c.gens
}

/// Reductions of an element set to every level 2^0 .. 2^n.
#[derive(Clone, Debug)]
pub struct Ladder {
    pub rings: Vec<MatRing>,
    pub sets: Vec<MemberSet>,
}

impl Ladder {
    pub fn new(ring: &MatRing, elements: &[u32]) -> Self {
        let n = ring.exponent();
        let mut rings = Vec::new();
        let mut sets = Vec::new();
        for j in 0..=n {
            let rj = MatRing::pow2(j);
            let red = reduce_elements(ring, elements, &rj);
            sets.push(MemberSet::from_elements(&rj, &red));
            rings.push(rj);
        }
        Ladder { rings, sets }
    }

    pub fn top(&self) -> usize {
        self.rings.len() - 1
    }
}

/// Level-by-level search for g mod 2^n with g·h·g⁻¹ in the target for every
/// h in `gens` (given mod 2^n, n = ladder top). Returns the first solution
/// found, or every solution when `all` is set.
pub fn transporter(gens: &[u32], ladder: &Ladder, all: bool) -> Vec<u32> {
    let n = ladder.top();
    let top = ladder.rings[n];
    let gens_at: Vec<Vec<u32>> = ladder
        .rings
        .iter()
        .map(|rj| gens.iter().map(|&h| top.reduce_to(h, rj)).collect())
        .collect();
    let mut out = Vec::new();
    let start = ladder.rings[0];
    let id0 = start.identity();
    dfs(0, id0, &gens_at, ladder, all, &mut out);
    out
}

fn dfs(j: usize, g: u32, gens_at: &[Vec<u32>], ladder: &Ladder, all: bool, out: &mut Vec<u32>) -> bool {
    let rj = ladder.rings[j];
    let Some(gi) = rj.inv(g) else { return false };
    for &h in &gens_at[j] {
        if !ladder.sets[j].contains(rj.mul(rj.mul(g, h), gi)) {
            return false;
        }
    }
    if j == ladder.top() {
        out.push(g);
        return !all;
    }
    let next = ladder.rings[j + 1];
    for x in rj.lifts(g, &next) {
        if dfs(j + 1, x, gens_at, ladder, all, out) {
            return true;
        }
    }
    false
}

/// Brute-force transporter over all of GL2(Z/m); used for non-2-power moduli.
pub fn transporter_brute(ring: &MatRing, gens: &[u32], target: &FiniteGroup, all: bool) -> Vec<u32> {
    let mut out = Vec::new();
    for g in ring.units() {
        let gi = ring.inv(g).unwrap();
        if gens.iter().all(|&h| target.contains(ring.mul(ring.mul(g, h), gi))) {
            out.push(g);
            if !all {
                break;
            }
        }
    }
    out
}

/// Some g with g·H·g⁻¹ = K (finite groups over the same ring).
pub fn conjugator(h: &FiniteGroup, k: &FiniteGroup) -> Option<u32> {
    if h.ring != k.ring || h.order() != k.order() {
        return None;
    }
    if h.ring.modulus().is_power_of_two() {
        let ladder = Ladder::new(&k.ring, &k.elements);
        transporter(&h.generators, &ladder, false).first().copied()
    } else {
        transporter_brute(&h.ring, &h.generators, k, false).first().copied()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn closure_small_groups() {
        let r = MatRing::new(16);
        let g = FiniteGroup::closure(r, &[r.minus_identity()]);
        assert_eq!(g.order(), 2);
        let r4 = MatRing::new(4);
        let sl = FiniteGroup::closure(r4, &[r4.pack_i64([1, 1, 0, 1]), r4.pack_i64([0, -1, 1, 0])]);
        let brute: Vec<u32> = r4.units().filter(|&x| r4.det(x) == 1).collect();
        assert_eq!(sl.elements, brute);
        assert_eq!(sl.order(), 48);
    }

    #[test]
    fn closure_is_idempotent_and_order_independent() {
        let r = MatRing::new(16);
        let gens = [r.pack([7, 14, 0, 1]), r.pack([1, 5, 6, 11]), r.pack([3, 0, 0, 7])];
        let a = FiniteGroup::closure(r, &gens);
        let mut rev = gens;
        rev.reverse();
        let b = FiniteGroup::closure(r, &rev);
        assert_eq!(a.elements, b.elements);
        let c = FiniteGroup::closure(r, &a.elements);
        assert_eq!(a.elements, c.elements);
    }

    #[test]
    fn lift_reduce_round_trip() {
        let r2 = MatRing::new(2);
        let r4 = MatRing::new(4);
        let full2 = FiniteGroup::full(r2);
        let lifted = full2.lift(r4);
        assert_eq!(lifted.order(), 96);
        assert_eq!(lifted.elements, FiniteGroup::closure(r4, &lifted.generators).elements);
        assert_eq!(lifted.reduce(r2).elements, full2.elements);
    }

    #[test]
    fn borel_upper_and_lower_are_conjugate() {
        let r = MatRing::new(4);
        let upper: Vec<u32> = r.units().filter(|&x| r.unpack(x)[2] == 0).collect();
        let lower: Vec<u32> = r.units().filter(|&x| r.unpack(x)[1] == 0).collect();
        let u = FiniteGroup::from_elements(r, upper);
        let l = FiniteGroup::from_elements(r, lower);
        let g = conjugator(&u, &l).expect("conjugate");
        assert_eq!(u.conjugate_by(g).elements, l.elements);
        let w = r.pack([0, 1, 1, 0]);
        assert_eq!(u.conjugate_by(w).elements, l.elements);
        // brute-force transporter agrees
        assert!(!transporter_brute(&r, &u.generators, &l, false).is_empty());
    }

    #[test]
    fn abelian_classes_are_singletons() {
        let r = MatRing::new(16);
        let g = FiniteGroup::closure(r, &[r.pack([3, 0, 0, 5]), r.pack([5, 0, 0, 1])]);
        let cls = g.conjugacy_classes();
        assert_eq!(cls.len(), g.order());
        assert!(cls.iter().all(|&(_, s)| s == 1));
    }

    #[test]
    fn class_sizes_sum_to_order() {
        let r = MatRing::new(4);
        let g = FiniteGroup::full(r);
        let (cls, map) = g.class_map();
        assert_eq!(cls.iter().map(|c| c.1).sum::<usize>(), 96);
        assert_eq!(map.len(), 96);
    }
}
