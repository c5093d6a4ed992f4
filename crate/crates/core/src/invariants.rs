//! Modular curve invariants: PSL2 index, cusps, elliptic points, genus.

use crate::error::{Error, Result};
use crate::residue::MatRing;
use crate::subgroup::{OpenSubgroup, SubgroupPredicates};
use serde::{Deserialize, Serialize};
use std::collections::HashMap;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CurveInvariants {
    pub psl2_index: u64,
    pub cusps: u64,
    pub e2: u64,
    pub e3: u64,
    pub genus: u64,
    pub flags: SubgroupPredicates,
}

/// ±(H ∩ SL2) at modulus N = max(level, 2), sorted.
fn signed_sl2_part(h: &OpenSubgroup) -> (MatRing, Vec<u32>) {
    let k = h.level_exp().max(1);
    let g = h.reduce(k);
    let r = g.ring;
    let mut out: Vec<u32> = g.elements.iter().copied().filter(|&x| r.det(x) == 1).collect();
    let neg: Vec<u32> = out.iter().map(|&x| r.neg(x)).collect();
    out.extend(neg);
    out.sort_unstable();
    out.dedup();
    (r, out)
}

/// Right cosets G·x of G = ±(H ∩ SL2) in SL2(Z/N), with the permutations
/// induced by right multiplication by T, S and R = S·T⁻¹.
struct CosetAction {
    t: Vec<usize>,
    s: Vec<usize>,
    rr: Vec<usize>,
}

fn coset_action(r: &MatRing, g: &[u32]) -> CosetAction {
    let canon = |x: u32| g.iter().map(|&y| r.mul(y, x)).min().unwrap();
    let tm = r.pack_i64([1, 1, 0, 1]);
    let sm = r.pack_i64([0, -1, 1, 0]);
    let rm = r.pack_i64([0, -1, 1, -1]);
    let mut ids: HashMap<u32, usize> = HashMap::new();
    let mut reps = vec![r.identity()];
    ids.insert(canon(r.identity()), 0);
    let (mut t, mut s, mut rr) = (Vec::new(), Vec::new(), Vec::new());
    let mut i = 0;
    while i < reps.len() {
        let x = reps[i];
        for (gen, perm) in [(tm, &mut t), (sm, &mut s), (rm, &mut rr)] {
            let y = r.mul(x, gen);
            let c = canon(y);
            let n = ids.len();
            let id = *ids.entry(c).or_insert_with(|| {
                reps.push(y);
                n
            });
            perm.push(id);
        }
        i += 1;
    }
    CosetAction { t, s, rr }
}

fn count_orbits(perm: &[usize]) -> u64 {
    let mut seen = vec![false; perm.len()];
    let mut n = 0;
    for i in 0..perm.len() {
        if !seen[i] {
            n += 1;
            let mut j = i;
            while !seen[j] {
                seen[j] = true;
                j = perm[j];
            }
        }
    }
    n
}

pub fn invariants(h: &OpenSubgroup) -> Result<CurveInvariants> {
    let (r, g) = signed_sl2_part(h);
    let act = coset_action(&r, &g);
    let index = act.t.len() as u64;
    let cusps = count_orbits(&act.t);
    let e2 = act.s.iter().enumerate().filter(|(i, &j)| *i == j).count() as u64;
    let e3 = act.rr.iter().enumerate().filter(|(i, &j)| *i == j).count() as u64;
    let twelve_g = 12 + index as i64 - 3 * e2 as i64 - 4 * e3 as i64 - 6 * cusps as i64;
    if twelve_g < 0 || twelve_g % 12 != 0 {
        return Err(Error::Parse(format!(
            "Riemann-Hurwitz violated: index {index}, cusps {cusps}, e2 {e2}, e3 {e3}"
        )));
    }
    Ok(CurveInvariants {
        psl2_index: index,
        cusps,
        e2,
        e3,
        genus: (twelve_g / 12) as u64,
        flags: h.predicates(),
    })
}

pub fn cusp_count(h: &OpenSubgroup) -> Result<u64> {
    Ok(invariants(h)?.cusps)
}

/// Cusps as orbits of ±(H ∩ SL2) on primitive row vectors modulo sign.
pub fn cusp_count_vectors(h: &OpenSubgroup) -> u64 {
    let (r, g) = signed_sl2_part(h);
    let m = r.modulus();
    let gens = crate::group::generators_of(&r, &g, &[]);
    let key = |v: (u32, u32)| v.0 * m + v.1;
    let mut seen = vec![false; (m * m) as usize];
    let mut orbits = 0;
    for x in 0..m {
        for y in 0..m {
            if (x | y) & 1 == 0 || seen[key((x, y)) as usize] {
                continue;
            }
            orbits += 1;
            let mut stack = vec![(x, y)];
            seen[key((x, y)) as usize] = true;
            while let Some(v) = stack.pop() {
                let mut nbrs: Vec<(u32, u32)> = gens.iter().map(|&a| r.act_row(v, a)).collect();
                nbrs.push(((m - v.0) % m, (m - v.1) % m));
                for w in nbrs {
                    if !seen[key(w) as usize] {
                        seen[key(w) as usize] = true;
                        stack.push(w);
                    }
                }
            }
        }
    }
    orbits
}

/// Orbits of H ∩ SL2 on P^1(Z/N), the projective-line variant of the cusp
/// count. It agrees with `cusp_count` only for some subgroups.
pub fn cusp_count_p1(h: &OpenSubgroup) -> u64 {
    let (r, g) = signed_sl2_part(h);
    let m = r.modulus();
    let gens = crate::group::generators_of(&r, &g, &[]);
    let pts = crate::residue::projective_line(m);
    let canon = |v: (u32, u32)| crate::residue::ProjectivePoint::new(v.0 as i64, v.1 as i64, m).unwrap();
    let index: HashMap<_, usize> = pts.iter().enumerate().map(|(i, p)| (*p, i)).collect();
    let mut seen = vec![false; pts.len()];
    let mut orbits = 0;
    for i in 0..pts.len() {
        if seen[i] {
            continue;
        }
        orbits += 1;
        seen[i] = true;
        let mut stack = vec![pts[i]];
        while let Some(p) = stack.pop() {
            for &a in &gens {
                let q = canon(r.act_row((p.x, p.y), a));
                let j = index[&q];
                if !seen[j] {
                    seen[j] = true;
                    stack.push(q);
                }
            }
        }
    }
    orbits
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::group::FiniteGroup;

    #[test]
    fn full_group_is_x1() {
        let inv = invariants(&OpenSubgroup::full()).unwrap();
        assert_eq!((inv.psl2_index, inv.cusps, inv.e2, inv.e3, inv.genus), (1, 1, 1, 1, 0));
    }

    #[test]
    fn principal_level_8_matches_classical_formula() {
        // X(N): d = |SL2(Z/N)|/2, cusps d/N, genus 1 + d(N-6)/(12N)
        let r = MatRing::new(8);
        let h = OpenSubgroup::from_group(FiniteGroup::closure(r, &[]));
        let inv = invariants(&h).unwrap();
        let d = 384 / 2;
        assert_eq!(inv.psl2_index, d);
        assert_eq!(inv.cusps, d / 8);
        assert_eq!(inv.genus, 1 + d * 2 / 96);
        assert_eq!(inv.genus, 5);
        assert_eq!(inv.cusps, 24);
        assert_eq!(cusp_count_vectors(&h), 24);
        assert_eq!(cusp_count_p1(&h), 12);
    }

    #[test]
    fn borel_level_4() {
        // X0(4): index 6, three cusps, genus 0
        let r = MatRing::new(4);
        let b = FiniteGroup::from_elements(r, r.units().filter(|&x| r.unpack(x)[2] == 0).collect());
        let inv = invariants(&OpenSubgroup::from_group(b)).unwrap();
        assert_eq!((inv.psl2_index, inv.cusps, inv.e2, inv.e3, inv.genus), (6, 3, 0, 0, 0));
    }
}
