// Frobenius classes from the resolvents against independent mod-p data:
// brute-force point counts and factorization patterns of division polynomials.

use gl2tower_core::group::FiniteGroup;
use gl2tower_core::{MatRing, OpenSubgroup};
use gl2tower_resolvent::fp::distinct_degree;
use gl2tower_resolvent::resolvent::{frobenius_class, prepare, primes_up_to};
use gl2tower_resolvent::zpoly::DivisionPolynomials;
use gl2tower_resolvent::{certify_image, parse_curve, CurveModel, ProverConfig, Verdict};
use std::collections::BTreeMap;

fn brute_count(a: [i64; 5], p: u64) -> u64 {
    let p = p as i64;
    let [a1, a2, a3, a4, a6] = a.map(|v| v.rem_euclid(p));
    let mut n = 1;
    for x in 0..p {
        for y in 0..p {
            let lhs = (y * y + a1 * x * y + a3 * y) % p;
            let rhs = (((x * x % p) * x) + a2 * x * x + a4 * x + a6) % p;
            if lhs == rhs {
                n += 1;
            }
        }
    }
    n
}

/// Multiset of irreducible factor degrees of a squarefree polynomial mod p.
fn factor_degrees(f: &[u64], p: u64) -> BTreeMap<usize, usize> {
    let mut out = BTreeMap::new();
    for (d, g) in distinct_degree(f, p) {
        *out.entry(d).or_insert(0) += (g.len() - 1) / d;
    }
    out
}

/// Orbit lengths of ⟨A⟩ on {±v} for v of exact order n, i.e. the factor
/// degrees of the x-coordinate polynomial of the points of exact order n.
fn pm_orbits(r: &MatRing, a: u32, n: u32) -> BTreeMap<usize, usize> {
    let neg = |v: (u32, u32)| ((n - v.0) % n, (n - v.1) % n);
    let key = |v: (u32, u32)| v.min(neg(v));
    let mut seen = std::collections::HashSet::new();
    let mut out = BTreeMap::new();
    for x in 0..n {
        for y in 0..n {
            if x % 2 == 0 && y % 2 == 0 {
                continue;
            }
            if !seen.insert(key((x, y))) {
                continue;
            }
            let mut len = 1;
            let mut w = r.act_row((x, y), a);
            while key(w) != key((x, y)) {
                seen.insert(key(w));
                w = r.act_row(w, a);
                len += 1;
            }
            *out.entry(len).or_insert(0) += 1;
        }
    }
    out
}

fn sub_counts(a: &BTreeMap<usize, usize>, b: &BTreeMap<usize, usize>) -> BTreeMap<usize, usize> {
    let mut out = a.clone();
    for (d, c) in b {
        let e = out.get_mut(d).expect("factor degree missing");
        *e -= c;
        if *e == 0 {
            out.remove(d);
        }
    }
    out
}

fn check_against_oracle(coeffs: [i64; 5], n: u32, bound: u64) -> usize {
    let e = CurveModel::new(coeffs).unwrap();
    let r = MatRing::new(n);
    let h = FiniteGroup::full(r);
    let (_, _, rset) = prepare(&e, n, &h, &ProverConfig::default()).unwrap();
    let mut divp = DivisionPolynomials::new(&e);
    let fn_ = divp.f(n as usize);
    let fhalf = divp.f(n as usize / 2);
    let disc = e.discriminant();
    let mut checked = 0;
    for p in primes_up_to(bound).into_iter().filter(|&p| p > 2) {
        if disc.is_divisible_u(p as u32) {
            continue;
        }
        let Ok(label) = frobenius_class(&rset, &e, p) else { continue };
        let c = &rset.classes[label];
        let ap = p as i64 + 1 - brute_count(coeffs, p) as i64;
        assert_eq!(c.det as u64, p % n as u64, "det at p = {p}");
        assert_eq!(c.trace as i64, ap.rem_euclid(n as i64), "trace at p = {p}");
        let a = r.pack(c.representative);
        let primitive = if n == 2 {
            factor_degrees(&e.two_torsion_cubic().reduce(p), p)
        } else if n == 4 {
            factor_degrees(&fn_.reduce(p), p)
        } else {
            sub_counts(&factor_degrees(&fn_.reduce(p), p), &factor_degrees(&fhalf.reduce(p), p))
        };
        assert_eq!(pm_orbits(&r, a, n), primitive, "cycle type at p = {p}");
        checked += 1;
    }
    checked
}

#[test]
fn frobenius_classes_match_mod_p_data_n4() {
    for c in [[0, 0, 1, -1, 0], [1, -1, 1, -3, 5], [0, 1, 1, -2, 0]] {
        assert!(check_against_oracle(c, 4, 400) >= 60, "{c:?}");
    }
}

#[test]
fn frobenius_classes_match_mod_p_data_n8() {
    let k = check_against_oracle([0, 0, 1, -1, 0], 8, 1000);
    assert!(k >= 50, "{k}");
}

#[test]
fn full_two_torsion_is_not_certified_full() {
    // y² = x(x − 1)(x + 2): all 2-torsion rational, image mod 2 trivial
    let e = parse_curve("0,1,0,-2,0").unwrap();
    let rep = certify_image(&e, 4, &OpenSubgroup::full(), 500, &ProverConfig::default()).unwrap();
    assert_eq!(rep.verdict, Verdict::Inconclusive);
    // every observed class lies in the kernel of reduction mod 2
    for &l in &rep.observed {
        let [a, b, c, d] = rep.classes[l].representative;
        assert!(a % 2 == 1 && b % 2 == 0 && c % 2 == 0 && d % 2 == 1);
    }
}

#[test]
fn full_image_curve_certified_at_4() {
    let e = parse_curve("0,0,1,-1,0").unwrap();
    let rep = certify_image(&e, 4, &OpenSubgroup::full(), 1000, &ProverConfig::default()).unwrap();
    assert_eq!(rep.verdict, Verdict::ImageEqualsH);
    assert_eq!(rep.conjugates_passing, 1);
    assert_eq!(rep.classes.len(), 14);
    // splitting primes have density 1/96, so not every class need show up
    assert!(rep.observed.len() >= 12, "{:?}", rep.unobserved);
}

#[test]
fn bad_curves_are_rejected() {
    assert!(parse_curve("0,0,0,0,0").is_err());
    assert!(parse_curve("1,2,3").is_err());
    assert!(parse_curve("a,b,c,d,e").is_err());
}
