//! Maximal subgroups.
//!
//! For a finite subgroup Q of GL2(Z/2^n) let P be the kernel of reduction
//! mod 2 and S = Q mod 2 ⊆ GL2(F2) ≅ S3. Q is solvable and its chief factors
//! have order 2, 3 or 4, so a maximal subgroup has index 2 (kernel of a
//! character of Q/⟨q²⟩), index 3 (preimage of an index-3 subgroup of S) or
//! index 4 (normalizer of ⟨C, x⟩ where x has order 3 and P/C is a
//! Q-invariant plane of P/Φ(P) on which x acts nontrivially).

use crate::error::{Error, Result};
use crate::group::{generators_of, Closure, FiniteGroup};
use crate::residue::MatRing;
use crate::subgroup::OpenSubgroup;

/// Quotient of a group by the subgroup generated by squares.
pub struct SquareQuotient {
    /// Generators of ⟨g² : g ∈ G⟩.
    pub square_gens: Vec<u32>,
    /// Representatives of a basis of G/⟨g²⟩ over F2.
    pub basis: Vec<u32>,
    /// Coordinates (bitmask over `basis`) of each element of G, parallel to
    /// the sorted element list.
    pub coords: Vec<u32>,
}

pub fn square_quotient(g: &FiniteGroup) -> SquareQuotient {
    let r = g.ring;
    let mut s = Closure::new(r);
    for &x in &g.elements {
        s.extend(r.mul(x, x));
    }
    let square_gens = s.gens.clone();
    let idx = |x: u32| g.elements.binary_search(&x).expect("element of G");
    let mut coords = vec![u32::MAX; g.order()];
    let mut cur: Vec<u32> = s.elems.clone();
    for &e in &cur {
        coords[idx(e)] = 0;
    }
    let mut basis = Vec::new();
    for (i, &x) in g.elements.iter().enumerate() {
        if cur.len() == g.order() {
            break;
        }
        if coords[i] != u32::MAX {
            continue;
        }
        assert!(basis.len() < 32, "elementary quotient too large");
        let bit = 1u32 << basis.len();
        basis.push(x);
        let n = cur.len();
        for j in 0..n {
            let y = r.mul(cur[j], x);
            let c = coords[idx(cur[j])] ^ bit;
            coords[idx(y)] = c;
            cur.push(y);
        }
    }
    SquareQuotient { square_gens, basis, coords }
}

#[inline]
fn parity(x: u32) -> u32 {
    x.count_ones() & 1
}

/// All index-2 subgroups of `g` as kernels of nonzero characters.
pub fn index2_subgroups(g: &FiniteGroup) -> Vec<FiniteGroup> {
    let sq = square_quotient(g);
    let r = g.ring;
    let d = sq.basis.len();
    let mut out = Vec::new();
    for phi in 1u32..(1 << d) {
        let elements: Vec<u32> = g
            .elements
            .iter()
            .zip(&sq.coords)
            .filter(|(_, &c)| parity(c & phi) == 0)
            .map(|(&x, _)| x)
            .collect();
        let i0 = phi.trailing_zeros() as usize;
        let mut gens = sq.square_gens.clone();
        for (i, &x) in sq.basis.iter().enumerate() {
            if phi >> i & 1 == 0 {
                gens.push(x);
            } else if i != i0 {
                gens.push(r.mul(x, sq.basis[i0]));
            }
        }
        out.push(FiniteGroup { ring: r, elements, generators: gens });
    }
    out
}

/// Image of a functional under the dual of a linear map given by its columns.
#[inline]
fn dual(phi: u32, cols: &[u32]) -> u32 {
    cols.iter().enumerate().fold(0, |acc, (i, &c)| acc | parity(phi & c) << i)
}

/// Maximal subgroups of a finite subgroup of GL2(Z/2^n), one per
/// Q-conjugacy class, with their indices. `keep` filters element sets
/// before generators are computed.
pub fn maximal_subgroups_finite_filtered(
    q: &FiniteGroup,
    keep: &dyn Fn(&[u32]) -> bool,
) -> Vec<(FiniteGroup, u32)> {
    let r = q.ring;
    let mut out = Vec::new();
    for k in index2_subgroups(q) {
        if keep(&k.elements) {
            out.push((k, 2));
        }
    }
    if r.modulus() == 1 {
        return out;
    }
    let r2 = MatRing::new(2);
    let red2 = |x: u32| r.reduce_to(x, &r2);
    let mut image2: Vec<u32> = q.elements.iter().map(|&x| red2(x)).collect();
    image2.sort_unstable();
    image2.dedup();
    if image2.len() % 3 != 0 {
        return out;
    }
    let id2 = r2.identity();
    // index 3
    let allowed: Vec<u32> = if image2.len() == 6 { vec![id2, r2.pack([0, 1, 1, 0])] } else { vec![id2] };
    let m3: Vec<u32> = q.elements.iter().copied().filter(|&x| allowed.contains(&red2(x))).collect();
    if keep(&m3) {
        let gens = generators_of(&r, &m3, &[]);
        out.push((FiniteGroup { ring: r, elements: m3, generators: gens }, 3));
    }
    // index 4
    let p_elems: Vec<u32> = q.elements.iter().copied().filter(|&x| red2(x) == id2).collect();
    let p = FiniteGroup { ring: r, generators: generators_of(&r, &p_elems, &[]), elements: p_elems };
    let sq = square_quotient(&p);
    let d = sq.basis.len();
    let pcoord = |x: u32| sq.coords[p.elements.binary_search(&x).expect("element of P")];
    let action = |g: u32| -> Vec<u32> {
        let gi = r.inv(g).unwrap();
        sq.basis.iter().map(|&b| pcoord(r.mul(r.mul(g, b), gi))).collect()
    };
    let n = r.exponent();
    let y = *q.elements.iter().find(|&&x| r2.trace(red2(x)) == 1).expect("order-3 element mod 2");
    let x = r.pow(y, 1u64 << (n + 2));
    let ax = action(x);
    let gen_actions: Vec<Vec<u32>> = q.generators.iter().map(|&g| action(g)).collect();
    let mut planes = std::collections::BTreeSet::new();
    for phi in 1u32..(1 << d) {
        let psi = dual(phi, &ax);
        if psi == phi {
            continue;
        }
        let span = [phi, psi, phi ^ psi];
        if dual(psi, &ax) != phi ^ psi {
            continue;
        }
        let invariant = gen_actions
            .iter()
            .all(|a| [phi, psi].iter().all(|&f| span.contains(&dual(f, a))));
        if invariant {
            let mut key = span;
            key.sort_unstable();
            planes.insert(key);
        }
    }
    let x2 = r.mul(x, x);
    let (xi, x2i) = (r.inv(x).unwrap(), r.inv(x2).unwrap());
    let x_mod2 = red2(x);
    for key in planes {
        let (phi, psi) = (key[0], key[1]);
        let in_c = |z: u32| {
            let c = pcoord(z);
            parity(c & phi) == 0 && parity(c & psi) == 0
        };
        let m4: Vec<u32> = q
            .elements
            .iter()
            .copied()
            .filter(|&g| {
                let y = r.mul(r.mul(g, x), r.inv(g).unwrap());
                let z = if red2(y) == x_mod2 { r.mul(y, xi) } else { r.mul(y, x2i) };
                in_c(z)
            })
            .collect();
        assert_eq!(m4.len() * 4, q.order(), "index-4 construction");
        if keep(&m4) {
            let gens = generators_of(&r, &m4, &[x]);
            out.push((FiniteGroup { ring: r, elements: m4, generators: gens }, 4));
        }
    }
    out
}

pub fn maximal_subgroups_finite(q: &FiniteGroup) -> Vec<(FiniteGroup, u32)> {
    maximal_subgroups_finite_filtered(q, &|_| true)
}

/// Exponent of the working modulus for maximal subgroups of a level-2^k group.
pub fn working_exponent(k: u32) -> u32 {
    (k + 1).max(3)
}

/// Maximal open subgroups of an open subgroup.
#[derive(Clone, Debug)]
pub struct MaximalSet {
    pub parent_fingerprint: u64,
    pub children: Vec<OpenSubgroup>,
    pub indices: Vec<u32>,
    pub completeness_note: String,
}

/// Maximal open subgroups of `h` up to ambient conjugacy, sorted by
/// (index, fingerprint). Only children whose element set at the working
/// level passes `keep` are returned.
pub fn maximal_subgroups_filtered(h: &OpenSubgroup, keep: &dyn Fn(&[u32]) -> bool) -> MaximalSet {
    let l = working_exponent(h.level_exp());
    let q = h.reduce(l);
    let mut kids: Vec<(OpenSubgroup, u32)> = Vec::new();
    for (m, idx) in maximal_subgroups_finite_filtered(&q, keep) {
        let m = OpenSubgroup::from_group(m);
        if !kids.iter().any(|(k, _)| k.is_conjugate(&m).is_some()) {
            kids.push((m, idx));
        }
    }
    kids.sort_by_key(|(k, i)| (*i, k.fingerprint()));
    MaximalSet {
        parent_fingerprint: h.fingerprint(),
        indices: kids.iter().map(|k| k.1).collect(),
        children: kids.into_iter().map(|k| k.0).collect(),
        completeness_note: format!(
            "index-2 kernels of Q/Q^2, index-3 preimages from Q mod 2, index-4 invariant planes of P/Phi(P); Q = H mod 2^{l}"
        ),
    }
}

pub fn maximal_subgroups(h: &OpenSubgroup) -> MaximalSet {
    maximal_subgroups_filtered(h, &|_| true)
}

/// Whether M is a maximal subgroup of H, checked by adjoining one element
/// from each nontrivial right coset.
pub fn is_maximal(m: &OpenSubgroup, h: &OpenSubgroup) -> Result<bool> {
    let n = m.level_exp().max(h.level_exp());
    let (mg, hg) = (m.reduce(n), h.reduce(n));
    if !mg.is_subset_of(&hg) {
        return Err(Error::NotContained);
    }
    if mg.order() == hg.order() {
        return Ok(false);
    }
    let r = hg.ring;
    let mut covered = crate::group::MemberSet::empty(&r);
    for &x in &mg.elements {
        covered.insert(x);
    }
    for &x in &hg.elements {
        if covered.contains(x) {
            continue;
        }
        for &y in &mg.elements {
            covered.insert(r.mul(y, x));
        }
        let mut c = Closure::new(r);
        for &g in mg.generators.iter().chain(std::iter::once(&x)) {
            c.extend(g);
        }
        if c.len() != hg.order() {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Index-2 subgroups of H not containing −I, up to ambient conjugacy.
pub fn minus_identity_free_index2_subgroups(h: &OpenSubgroup) -> Vec<OpenSubgroup> {
    let l = working_exponent(h.level_exp());
    let q = h.reduce(l);
    let mi = q.ring.minus_identity();
    let mut out: Vec<OpenSubgroup> = Vec::new();
    for k in index2_subgroups(&q) {
        if k.contains(mi) {
            continue;
        }
        let k = OpenSubgroup::from_group(k);
        if !out.iter().any(|o| o.is_conjugate(&k).is_some()) {
            out.push(k);
        }
    }
    out.sort_by_key(|k| k.fingerprint());
    out
}

/// Number of −I-free index-2 subgroups before conjugacy dedup.
pub fn count_minus_identity_free_index2(h: &OpenSubgroup) -> usize {
    let q = h.reduce(working_exponent(h.level_exp()));
    let mi = q.ring.minus_identity();
    index2_subgroups(&q).iter().filter(|k| !k.contains(mi)).count()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::residue::ResidueMatrix;

    #[test]
    fn full_group_children() {
        let f = OpenSubgroup::full();
        let ms = maximal_subgroups(&f);
        assert!(ms.indices.iter().all(|i| [2, 3, 4].contains(i)));
        assert_eq!(ms.indices.iter().filter(|&&i| i == 4).count(), 1);
        assert_eq!(ms.indices.iter().filter(|&&i| i == 3).count(), 1);
        for c in &ms.children {
            assert!(is_maximal(c, &f).unwrap());
            assert!(c.level() <= 8);
        }
    }

    #[test]
    fn pro2_group_has_only_index2_children() {
        // full preimage of {I} mod 2
        let r = MatRing::new(2);
        let g = OpenSubgroup::from_group(FiniteGroup::closure(r, &[]));
        let ms = maximal_subgroups(&g);
        assert!(!ms.children.is_empty());
        assert!(ms.indices.iter().all(|&i| i == 2));
    }

    #[test]
    fn gamma4_is_not_maximal_in_full_group() {
        let r = MatRing::new(4);
        let g4 = OpenSubgroup::from_group(FiniteGroup::closure(r, &[]));
        assert!(!is_maximal(&g4, &OpenSubgroup::full()).unwrap());
        let r2 = MatRing::new(2);
        let g2 = OpenSubgroup::from_group(FiniteGroup::closure(r2, &[]));
        assert!(g2.contains_subgroup(&g4));
        assert!(!is_maximal(&g4, &g2).unwrap());
        assert!(is_maximal(&OpenSubgroup::full(), &g4).is_err());
    }

    #[test]
    fn index2_matches_brute_force_hyperplanes() {
        // oracle: closures of all element triples; the group has rank <= 3
        let r = MatRing::new(8);
        let g = FiniteGroup::closure(r, &[r.pack([3, 0, 0, 1]), r.pack([1, 2, 0, 1]), r.pack([1, 0, 0, 5])]);
        let kernels = index2_subgroups(&g);
        let mut found = Vec::new();
        for &x in &g.elements {
            for &y in &g.elements {
                for &z in &g.elements {
                    let c = FiniteGroup::closure(r, &[x, y, z]);
                    if c.order() * 2 == g.order() && !found.contains(&c.elements) {
                        found.push(c.elements.clone());
                    }
                }
            }
        }
        let mut ours: Vec<Vec<u32>> = kernels.iter().map(|k| k.elements.clone()).collect();
        ours.sort();
        found.sort();
        assert_eq!(ours, found);
        for k in &kernels {
            assert_eq!(FiniteGroup::closure(r, &k.generators).elements, k.elements);
        }
    }

    #[test]
    fn children_contain_next_principal_kernel() {
        let m = |e: [i64; 4]| ResidueMatrix::new(e, 16).unwrap();
        let h = OpenSubgroup::from_generators(&[m([7, 14, 0, 1]), m([1, 5, 6, 11]), m([3, 0, 0, 7])]).unwrap();
        let ms = maximal_subgroups(&h);
        for c in &ms.children {
            assert!(c.level() <= 2 * h.level());
            assert!(is_maximal(c, &h).unwrap());
        }
    }
}
