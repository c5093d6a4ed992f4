// Structural properties that need no reference data.

use gl2tower_core::density::DensityRefiner;
use gl2tower_core::group::{conjugator, FiniteGroup};
use gl2tower_core::invariants::invariants;
use gl2tower_core::signature::{all_subgroups, subgroup_classes};
use gl2tower_core::tower::{enumerate_tower, TowerConfig};
use gl2tower_core::{MatRing, OpenSubgroup, ResidueMatrix};
use proptest::prelude::*;
use std::collections::BTreeSet;

fn unit(r: &MatRing, e: [u32; 4]) -> Option<u32> {
    let x = r.pack(e);
    r.is_unit(x).then_some(x)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn closure_is_idempotent(k in 1u32..=4, raw in prop::collection::vec(prop::array::uniform4(0u32..16), 1..4)) {
        let r = MatRing::pow2(k);
        let m = r.modulus();
        let gens: Vec<u32> = raw.iter().filter_map(|e| unit(&r, e.map(|v| v % m))).collect();
        let g = FiniteGroup::closure(r, &gens);
        let again = FiniteGroup::closure(r, &g.elements);
        prop_assert_eq!(&again.elements, &g.elements);
        let from_gens = FiniteGroup::closure(r, &g.generators);
        prop_assert_eq!(&from_gens.elements, &g.elements);
        for &x in &g.elements {
            for &y in &gens {
                prop_assert!(g.contains(r.mul(x, y)));
            }
        }
    }

    #[test]
    fn density_intervals_nest(raw in prop::collection::vec(prop::array::uniform4(0u32..8), 1..3)) {
        let gens: Vec<ResidueMatrix> = raw
            .iter()
            .filter_map(|e| ResidueMatrix::new(e.map(|v| v as i64), 8).ok().filter(|m| m.is_unit()))
            .collect();
        let h = OpenSubgroup::from_generators_at(&gens, 8).unwrap();
        let mut r = DensityRefiner::new(&h);
        let mut prev = r.interval(false);
        for _ in 0..4 {
            r.step();
            let cur = r.interval(false);
            prop_assert!(prev.lower <= cur.lower && cur.upper <= prev.upper);
            prop_assert!(cur.lower <= cur.upper);
            prev = cur;
        }
    }
}

// Conjugacy of subgroups mod 2^k agrees with conjugacy of their full
// preimages mod 2^(k+1).
#[test]
fn full_preimage_conjugacy_equivalence() {
    let r4 = MatRing::pow2(2);
    let r8 = MatRing::pow2(3);
    let subs: Vec<FiniteGroup> = all_subgroups(r4).into_iter().filter(|g| g.order() >= 8).collect();
    let mut checked = 0;
    for (i, a) in subs.iter().enumerate() {
        for b in subs.iter().skip(i + 1) {
            if a.order() != b.order() {
                continue;
            }
            let low = conjugator(a, b).is_some();
            let high = conjugator(&a.lift(r8), &b.lift(r8)).is_some();
            assert_eq!(low, high);
            checked += 1;
        }
    }
    assert!(checked > 100);
}

// A ↦ A² maps Γ(2^k) onto Γ(2^(k+1)) modulo Γ(2^(k+2)).
#[test]
fn squaring_is_surjective_on_kernel_layers() {
    for k in [2u32, 3] {
        let r = MatRing::pow2(k + 2);
        let step = 1u32 << k;
        let mut images = BTreeSet::new();
        for x in 0..4u32 {
            for y in 0..4u32 {
                for z in 0..4u32 {
                    for w in 0..4u32 {
                        let a = r.pack([1 + step * x, step * y, step * z, 1 + step * w]);
                        images.insert(r.mul(a, a));
                    }
                }
            }
        }
        // Γ(2^(k+1)) / Γ(2^(k+2)) has 16 elements
        assert_eq!(images.len(), 16, "k = {k}");
        let s2 = 1u32 << (k + 1);
        for img in images {
            let [a, b, c, d] = r.unpack(img);
            assert!(a % s2 == 1 && b % s2 == 0 && c % s2 == 0 && d % s2 == 1);
        }
    }
}

// Every proper subgroup of GL2(Z/4) misses some conjugacy class.
#[test]
fn jordan_class_coverage_mod_4() {
    let r = MatRing::pow2(2);
    let full = FiniteGroup::full(r);
    let (classes, class_of) = full.class_map();
    for h in subgroup_classes(r) {
        if h.order() == full.order() {
            continue;
        }
        let hit: BTreeSet<usize> = h.elements.iter().map(|x| class_of[x]).collect();
        assert!(hit.len() < classes.len(), "order {} subgroup meets every class", h.order());
    }
}

fn riemann_hurwitz_ok(h: &OpenSubgroup) -> bool {
    let inv = invariants(h).unwrap();
    // 12(g − 1) = μ − 3e2 − 4e3 − 6c
    let lhs = 12 * (inv.genus as i64 - 1);
    let rhs = inv.psl2_index as i64 - 3 * inv.e2 as i64 - 4 * inv.e3 as i64 - 6 * inv.cusps as i64;
    lhs == rhs
}

#[test]
fn riemann_hurwitz_on_small_subgroups() {
    for k in 1..=2 {
        for g in subgroup_classes(MatRing::pow2(k)) {
            let h = OpenSubgroup::from_group(g);
            assert!(riemann_hurwitz_ok(&h), "{}", h.to_text());
        }
    }
}

#[test]
fn riemann_hurwitz_on_every_tower_node() {
    let lat = enumerate_tower(&TowerConfig { max_level_exp: Some(4), ..TowerConfig::default() }).unwrap();
    assert!(lat.nodes.len() > 10);
    for n in &lat.nodes {
        assert!(riemann_hurwitz_ok(&n.subgroup), "node {}", n.id);
    }
    for e in &lat.edges {
        let (p, c) = (lat.node(e.from), lat.node(e.to));
        assert_eq!(c.subgroup.index(), p.subgroup.index() * e.degree);
        assert!(p.subgroup.contains_subgroup(&c.subgroup) || c.subgroup.conjugate_into(&p.subgroup).is_some());
    }
}
