//! Signatures {(det A, tr A, rank fix A)} of subgroups of GL2(Z/ℓ) and GL2(Z/ℓ²).

use crate::error::{Error, Result};
use crate::group::FiniteGroup;
use crate::residue::{prime_power, MatRing, ResidueMatrix};
use std::collections::{BTreeSet, HashSet};

pub type Triple = (u32, u32, u32);

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Signature {
    pub modulus: u32,
    pub triples: BTreeSet<Triple>,
}

/// Number of generators of the fixed module {v : vA = v} over Z/ℓ^e:
/// 2 minus the rank of A − I mod ℓ.
pub fn fix_rank(r: &MatRing, x: u32, ell: u32) -> u32 {
    let m = r.modulus();
    let [a, b, c, d] = r.unpack(x);
    let e = [(a + m - 1) % ell, b % ell, c % ell, (d + m - 1) % ell];
    if e.iter().all(|&v| v == 0) {
        return 2;
    }
    if (e[0] * e[3] + ell * ell - (e[1] * e[2]) % (ell * ell)) % ell == 0 {
        1
    } else {
        0
    }
}

fn prime_of(m: u32) -> Result<(u32, u32)> {
    let (p, e) = prime_power(m).ok_or(Error::InvalidModulus(m))?;
    if e > 2 {
        return Err(Error::InvalidModulus(m));
    }
    Ok((p, e))
}

pub fn signature_of_group(g: &FiniteGroup) -> Result<Signature> {
    let r = g.ring;
    let (ell, _) = prime_of(r.modulus())?;
    let triples = g.elements.iter().map(|&x| (r.det(x), r.trace(x), fix_rank(&r, x, ell))).collect();
    Ok(Signature { modulus: r.modulus(), triples })
}

pub fn signature(gens: &[ResidueMatrix], modulus: u32) -> Result<Signature> {
    prime_of(modulus)?;
    let r = MatRing::new(modulus);
    let mut packed = Vec::new();
    for g in gens {
        if g.modulus != modulus {
            return Err(Error::ModulusMismatch(modulus, g.modulus));
        }
        if !g.is_unit() {
            return Err(Error::NotInvertible(g.det()));
        }
        packed.push(r.pack(g.entries));
    }
    signature_of_group(&FiniteGroup::closure(r, &packed))
}

/// Parse generator lines `[[a,b],[c,d]]` (an optional `mod m` must match).
pub fn parse_generators(s: &str, modulus: u32) -> Result<Vec<ResidueMatrix>> {
    s.lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(|l| {
            let (mat, m) = match l.rsplit_once("mod") {
                Some((a, b)) => (a, Some(b)),
                None => (l, None),
            };
            if let Some(m) = m {
                let m: u32 = m.trim().parse().map_err(|_| Error::Parse(format!("bad modulus in {l:?}")))?;
                if m != modulus {
                    return Err(Error::ModulusMismatch(modulus, m));
                }
            }
            ResidueMatrix::new(crate::residue::parse_entries(mat)?, modulus)
        })
        .collect()
}

/// All subgroups of GL2(Z/m), by repeatedly joining with cyclic subgroups.
pub fn all_subgroups(r: MatRing) -> Vec<FiniteGroup> {
    let units: Vec<u32> = r.units().collect();
    let mut seen: HashSet<Vec<u32>> = HashSet::new();
    let triv = FiniteGroup::closure(r, &[]);
    seen.insert(triv.elements.clone());
    let mut out = vec![triv];
    let mut i = 0;
    while i < out.len() {
        let s = out[i].clone();
        for &g in &units {
            if s.contains(g) {
                continue;
            }
            let mut gens = s.generators.clone();
            gens.push(g);
            let t = FiniteGroup::closure(r, &gens);
            if seen.insert(t.elements.clone()) {
                out.push(t);
            }
        }
        i += 1;
    }
    out
}

/// Canonical form of the conjugacy class of a subgroup: the least sorted
/// element list among its conjugates.
fn class_canon(s: &FiniteGroup, units: &[u32]) -> Vec<u32> {
    units.iter().map(|&g| s.conjugate_by(g).elements).min().unwrap()
}

/// Conjugacy class representatives of subgroups of GL2(Z/m).
pub fn subgroup_classes(r: MatRing) -> Vec<FiniteGroup> {
    let units: Vec<u32> = r.units().collect();
    let mut seen = HashSet::new();
    all_subgroups(r).into_iter().filter(|s| seen.insert(class_canon(s, &units))).collect()
}

#[derive(Clone, Debug)]
pub struct SeparationReport {
    pub ell: u32,
    pub classes: usize,
    pub separates: bool,
    /// Pairs of non-conjugate class representatives with equal signature.
    pub counterexamples: Vec<(FiniteGroup, FiniteGroup)>,
}

/// Whether equal signatures force conjugacy among subgroups of GL2(F_ℓ).
/// With `with_fix_rank = false` only (det, trace) pairs are compared.
pub fn signature_separates_with(ell: u32, with_fix_rank: bool) -> Result<SeparationReport> {
    if ![2, 3, 5].contains(&ell) {
        return Err(Error::InvalidModulus(ell));
    }
    let r = MatRing::new(ell);
    let reps = subgroup_classes(r);
    let sig = |g: &FiniteGroup| -> BTreeSet<Triple> {
        signature_of_group(g)
            .unwrap()
            .triples
            .into_iter()
            .map(|(d, t, f)| (d, t, if with_fix_rank { f } else { 0 }))
            .collect()
    };
    let sigs: Vec<_> = reps.iter().map(sig).collect();
    let mut counterexamples = Vec::new();
    for i in 0..reps.len() {
        for j in i + 1..reps.len() {
            if sigs[i] == sigs[j] {
                counterexamples.push((reps[i].clone(), reps[j].clone()));
            }
        }
    }
    Ok(SeparationReport { ell, classes: reps.len(), separates: counterexamples.is_empty(), counterexamples })
}

pub fn signature_separates(ell: u32) -> Result<SeparationReport> {
    signature_separates_with(ell, true)
}

/// The mod ℓ² pair [[1−ℓ, ±ℓ],[0, 1+ℓ]].
pub fn ell_squared_pair(ell: u32) -> (ResidueMatrix, ResidueMatrix) {
    let l = ell as i64;
    let m = ell * ell;
    (
        ResidueMatrix::new([1 - l, l, 0, 1 + l], m).unwrap(),
        ResidueMatrix::new([1 - l, -l, 0, 1 + l], m).unwrap(),
    )
}

/// Whether two subgroups of GL2(Z/m) are conjugate, by exhaustive search.
pub fn conjugate_exhaustive(a: &FiniteGroup, b: &FiniteGroup) -> bool {
    if a.order() != b.order() {
        return false;
    }
    let r = a.ring;
    let found = r.units().any(|g| a.conjugate_by(g).elements == b.elements);
    found
}

/// Pairs of non-conjugate cyclic subgroups of order ℓ in GL2(Z/ℓ²) with
/// equal signature, one pair per unordered pair of conjugacy classes.
pub fn ell_squared_counterexamples(ell: u32) -> Vec<(ResidueMatrix, ResidueMatrix)> {
    let r = MatRing::new(ell * ell);
    let units: Vec<u32> = r.units().collect();
    let mut seen = HashSet::new();
    let mut reps = Vec::new();
    for &g in &units {
        let c = FiniteGroup::closure(r, &[g]);
        if c.order() == ell as usize && seen.insert(class_canon(&c, &units)) {
            reps.push((g, signature_of_group(&c).unwrap()));
        }
    }
    let mut out = Vec::new();
    for i in 0..reps.len() {
        for j in i + 1..reps.len() {
            if reps[i].1 == reps[j].1 {
                out.push((r.to_matrix(reps[i].0), r.to_matrix(reps[j].0)));
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn mat(e: [i64; 4], m: u32) -> ResidueMatrix {
        ResidueMatrix::new(e, m).unwrap()
    }

    #[test]
    fn trivial_and_minus_identity() {
        let s = signature(&[], 2).unwrap();
        assert_eq!(s.triples, BTreeSet::from([(1, 0, 2)]));
        let s = signature(&[mat([-1, 0, 0, -1], 3)], 3).unwrap();
        assert_eq!(s.triples, BTreeSet::from([(1, 2, 2), (1, 1, 0)]));
    }

    #[test]
    fn separation_mod_2_and_3() {
        assert!(signature_separates(2).unwrap().separates);
        // mod 3 the triple set does not separate: C4 and Q8, and two S3 in the Borel
        let rep = signature_separates(3).unwrap();
        assert_eq!(rep.classes, 16);
        let mut orders: Vec<_> = rep.counterexamples.iter().map(|(a, b)| (a.order(), b.order())).collect();
        orders.sort();
        assert_eq!(orders, vec![(4, 8), (6, 6)]);
        for (a, b) in &rep.counterexamples {
            assert!(!conjugate_exhaustive(a, b));
            assert_eq!(signature_of_group(a).unwrap(), signature_of_group(b).unwrap());
        }
    }

    #[test]
    fn fix_rank_needed_mod_2() {
        let rep = signature_separates_with(2, false).unwrap();
        assert!(!rep.separates);
        assert!(rep.counterexamples.iter().any(|(a, b)| a.order() + b.order() == 3));
    }

    #[test]
    fn mod_9_pair() {
        let (a, b) = ell_squared_pair(3);
        assert_eq!(a.entries, [7, 3, 0, 4]);
        let sa = signature(&[a], 9).unwrap();
        let sb = signature(&[b], 9).unwrap();
        assert_eq!(sa, sb);
        let r = MatRing::new(9);
        let ga = FiniteGroup::closure(r, &[r.pack(a.entries)]);
        let gb = FiniteGroup::closure(r, &[r.pack(b.entries)]);
        assert_eq!(ga.order(), 3);
        // the printed pair is conjugate by diag(1, -1)
        assert!(conjugate_exhaustive(&ga, &gb));
        assert_eq!(ga.conjugate_by(r.pack([1, 0, 0, 8])).elements, gb.elements);
        // genuine counterexamples of the same shape exist
        let ce = ell_squared_counterexamples(3);
        assert!(!ce.is_empty());
        let scalar = ResidueMatrix::new([4, 0, 0, 4], 9).unwrap();
        assert!(ce.iter().any(|(x, y)| *x == scalar || *y == scalar));
    }

    #[test]
    fn gl2_f2_has_four_classes() {
        // trivial, order 2, order 3, S3
        assert_eq!(subgroup_classes(MatRing::new(2)).len(), 4);
    }
}
