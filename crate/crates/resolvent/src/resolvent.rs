//! F(x), identification of the conjugate containing the image, the resolvents
//! Γ_C with h(x) = x³, Frobenius classes mod p, and the maximal-subgroup
//! coverage test.

use crate::curve::CurveModel;
use crate::error::{Error, Result};
use crate::fp;
use crate::numerics::{coefficient_bound_log10, cpow, round_product, torsion_table, vector_order, TorsionTable};
use crate::zpoly::ZPoly;
use gl2tower_core::group::FiniteGroup;
use gl2tower_core::maximal::maximal_subgroups_finite;
use gl2tower_core::{MatRing, OpenSubgroup};
use rug::{Complex, Float, Integer};
use serde::{Deserialize, Serialize};
use std::collections::{BTreeSet, HashMap};

pub const H_EXPONENT: u32 = 3;

/// Primes used to check coprimality of the resolvents.
const COPRIME_PRIMES: [u64; 3] = [4294967291, 4294967279, 4294967231];

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProverConfig {
    /// Starting precision in decimal digits; default 200 for N <= 8, 1000 for N = 16.
    pub digits: Option<u32>,
    /// Escalation stops here.
    pub max_digits: u32,
    /// Spare digits required beyond the coefficient bound.
    pub guard: u32,
}

impl Default for ProverConfig {
    fn default() -> Self {
        ProverConfig { digits: None, max_digits: 8000, guard: 10 }
    }
}

impl ProverConfig {
    pub fn start_digits(&self, n: u32) -> u32 {
        self.digits.unwrap_or(if n >= 16 { 1000 } else { 200 })
    }
}

fn margin(bound_log10: f64, digits: u32, guard: u32, what: &str) -> Result<()> {
    let need = bound_log10.max(0.0) + 2.0 * guard as f64;
    if (digits as f64) < need {
        return Err(Error::InsufficientPrecision(format!(
            "{what}: coefficient bound 10^{bound_log10:.1} needs {} digits, have {digits}",
            need.ceil()
        )));
    }
    Ok(())
}

#[derive(Clone, Debug)]
pub struct FPolynomial {
    pub poly: ZPoly,
    /// log10 of the a-priori bound on the coefficients.
    pub bound_log10: f64,
    /// Torsion labels (c, d) of the roots, in root order.
    pub labels: Vec<(u32, u32)>,
}

/// F = ∏ (X − f(P)) over the points of exact order N.
pub fn build_f(table: &TorsionTable, guard: u32) -> Result<FPolynomial> {
    let labels = table.exact_order_labels();
    let roots: Vec<Complex> = labels.iter().map(|&(c, d)| table.f_value(c, d)).collect();
    let prec = table.prec();
    let sep = Float::with_val(prec, Float::i_pow_u(10, table.digits / 2)).recip();
    for i in 0..roots.len() {
        for j in i + 1..roots.len() {
            if Float::with_val(prec, Complex::with_val(prec, &roots[i] - &roots[j]).abs_ref()) < sep {
                return Err(Error::RepeatedRoots(format!("{:?} and {:?}", labels[i], labels[j])));
            }
        }
    }
    let bound_log10 = coefficient_bound_log10(&roots);
    margin(bound_log10, table.digits, guard, "F")?;
    let coeffs = round_product(&roots, guard, prec)?;
    Ok(FPolynomial { poly: ZPoly::new(coeffs), bound_log10, labels })
}

/// A conjugate K = gHg⁻¹ of H inside GL2(Z/N).
#[derive(Clone, Debug)]
pub struct Conjugate {
    pub conjugator: u32,
    pub group: FiniteGroup,
    /// Distance of the step-2 sum from the nearest integer.
    pub distance: f64,
}

/// All distinct conjugates gHg⁻¹, g in GL2(Z/N), with one conjugator each.
pub fn conjugates(h: &FiniteGroup) -> Vec<(u32, FiniteGroup)> {
    let r = h.ring;
    let mut out: Vec<(u32, FiniteGroup)> = Vec::new();
    for g in r.units() {
        let gi = r.inv(g).unwrap();
        let gens: Vec<u32> = h.generators.iter().map(|&x| r.mul(r.mul(g, x), gi)).collect();
        if out.iter().any(|(_, k)| gens.iter().all(|&x| k.contains(x))) {
            continue;
        }
        out.push((g, h.conjugate_by(g)));
    }
    out
}

fn f_values(table: &TorsionTable) -> Vec<Option<Complex>> {
    let n = table.n;
    (0..n * n).map(|i| if i == 0 { None } else { Some(table.f_value(i / n, i % n)) }).collect()
}

/// Σ_{k∈K} [f(e1k)f(e2k) + f(e1k)f((1,1)k) + f(e2k)f((1,1)k)], row action.
pub fn integrality_sum(table: &TorsionTable, k: &FiniteGroup) -> Complex {
    let vals = f_values(table);
    integrality_sum_with(&vals, table.n, table.prec(), k)
}

fn integrality_sum_with(vals: &[Option<Complex>], n: u32, prec: u32, k: &FiniteGroup) -> Complex {
    let r = k.ring;
    let f = |v: (u32, u32)| vals[(v.0 * n + v.1) as usize].as_ref().expect("nonzero vector");
    let mut s = Complex::with_val(prec, 0);
    for &x in &k.elements {
        let u = f(r.act_row((1, 0), x));
        let v = f(r.act_row((0, 1), x));
        let w = f(r.act_row((1, 1), x));
        s += Complex::with_val(prec, u * v);
        s += Complex::with_val(prec, u * w);
        s += Complex::with_val(prec, v * w);
    }
    s
}

fn distance_to_integer(z: &Complex) -> f64 {
    let prec = z.prec().0;
    let re = z.real().clone();
    let d = Float::with_val(prec, &re - re.clone().round()).abs();
    let im = z.imag().clone().abs();
    d.max(&im).to_f64()
}

#[derive(Clone, Debug)]
pub struct Identification {
    pub tested: usize,
    pub passing: Vec<Conjugate>,
}

/// Conjugates of H mod N whose step-2 sum is within 10^-guard of an integer.
pub fn identify_conjugate(table: &TorsionTable, h: &FiniteGroup, guard: u32) -> Identification {
    let vals = f_values(table);
    let all = conjugates(h);
    let tol = 10f64.powi(-(guard as i32));
    let passing = all
        .iter()
        .filter_map(|(g, k)| {
            let s = integrality_sum_with(&vals, table.n, table.prec(), k);
            let distance = distance_to_integer(&s);
            (distance < tol).then(|| Conjugate { conjugator: *g, group: k.clone(), distance })
        })
        .collect();
    Identification { tested: all.len(), passing }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClassInfo {
    pub label: usize,
    pub size: usize,
    /// Representative in H coordinates, entries [a, b, c, d].
    pub representative: [u32; 4],
    pub det: u32,
    pub trace: u32,
}

#[derive(Clone, Debug)]
pub struct ResolventSet {
    pub n: u32,
    pub f: ZPoly,
    pub f_bound_log10: f64,
    pub resolvent_bound_log10: f64,
    pub digits: u32,
    pub h_exponent: u32,
    /// H mod N and the conjugate K = gHg⁻¹ containing the image.
    pub h: FiniteGroup,
    pub conjugator: u32,
    pub k: FiniteGroup,
    /// Conjugacy classes of H, in the order of `FiniteGroup::conjugacy_classes`.
    pub classes: Vec<ClassInfo>,
    /// Γ_C for each class label.
    pub resolvents: Vec<ZPoly>,
}

impl ResolventSet {
    pub fn identity_label(&self) -> usize {
        let id = self.h.ring.identity();
        self.classes.iter().position(|c| self.h.ring.pack(c.representative) == id).expect("identity class")
    }
}

/// Γ_C(X) = ∏_{σ∈C} (X − Σ_v a_v³ a_{vσ}) for every class C of K, with
/// a_v = f(P(v)) over exact-order labels v. Classes are labelled through the
/// conjugator by the classes of H.
pub fn build_resolvents(
    table: &TorsionTable,
    f: &FPolynomial,
    h: &FiniteGroup,
    conj: &Conjugate,
    guard: u32,
) -> Result<ResolventSet> {
    let n = table.n;
    let prec = table.prec();
    let r = h.ring;
    let k = &conj.group;
    let vals = f_values(table);
    let labels: Vec<(u32, u32)> = f.labels.clone();
    let cubes: Vec<Complex> = labels
        .iter()
        .map(|&(c, d)| cpow(vals[(c * n + d) as usize].as_ref().unwrap(), 3))
        .collect();
    let root_of = |sigma: u32| {
        let mut s = Complex::with_val(prec, 0);
        for (i, &v) in labels.iter().enumerate() {
            let w = r.act_row(v, sigma);
            s += Complex::with_val(prec, &cubes[i] * vals[(w.0 * n + w.1) as usize].as_ref().unwrap());
        }
        s
    };
    let (h_classes, h_map) = h.class_map();
    let g = conj.conjugator;
    let gi = r.inv(g).unwrap();
    let mut roots: Vec<Vec<Complex>> = vec![Vec::new(); h_classes.len()];
    for &sigma in &k.elements {
        let back = r.mul(r.mul(gi, sigma), g);
        roots[h_map[&back]].push(root_of(sigma));
    }
    let mut bound_log10 = f64::NEG_INFINITY;
    let mut resolvents = Vec::with_capacity(roots.len());
    for rs in &roots {
        let b = coefficient_bound_log10(rs);
        bound_log10 = bound_log10.max(b);
        margin(b, table.digits, guard, "resolvent")?;
        resolvents.push(ZPoly::new(round_product(rs, guard, prec)?));
    }
    check_coprime(&resolvents)?;
    let classes = h_classes
        .iter()
        .enumerate()
        .map(|(label, &(rep, size))| ClassInfo {
            label,
            size,
            representative: r.unpack(rep),
            det: r.det(rep),
            trace: r.trace(rep),
        })
        .collect();
    Ok(ResolventSet {
        n,
        f: f.poly.clone(),
        f_bound_log10: f.bound_log10,
        resolvent_bound_log10: bound_log10,
        digits: table.digits,
        h_exponent: H_EXPONENT,
        h: h.clone(),
        conjugator: g,
        k: k.clone(),
        classes,
        resolvents,
    })
}

/// Monic polynomials that are coprime modulo some prime are coprime over Q.
fn check_coprime(polys: &[ZPoly]) -> Result<()> {
    let reduced: Vec<Vec<Vec<u64>>> =
        COPRIME_PRIMES.iter().map(|&p| polys.iter().map(|f| f.reduce(p)).collect()).collect();
    for i in 0..polys.len() {
        for j in i + 1..polys.len() {
            let ok = COPRIME_PRIMES
                .iter()
                .enumerate()
                .any(|(t, &p)| fp::gcd(&reduced[t][i], &reduced[t][j], p).len() == 1);
            if !ok {
                return Err(Error::CommonFactor(i, j));
            }
        }
    }
    Ok(())
}

/// Tr_{F_p[x]/(F)}(x^(p+3)) for F monic and squarefree mod p.
pub fn frobenius_trace(f: &ZPoly, p: u64) -> Result<u64> {
    if p < 3 || p >= 1 << 32 {
        return Err(Error::BadPrime(p, "need an odd prime below 2^32".into()));
    }
    let fp_ = f.reduce(p);
    if !fp::is_squarefree(&fp_, p) {
        return Err(Error::BadPrime(p, "F is not squarefree mod p".into()));
    }
    let deg = fp_.len() - 1;
    let xp = fp::pow_poly_mod(&[0, 1], p as u128, &fp_, p);
    let g = fp::mul_mod(&xp, &fp::pow_poly_mod(&[0, 1], H_EXPONENT as u128, &fp_, p), &fp_, p);
    let ps = fp::power_sums(&fp_, deg, p);
    Ok(g.iter().zip(&ps).fold(0, |acc, (&a, &b)| ((acc as u128 + a as u128 * b as u128) % p as u128) as u64))
}

/// Labels of the resolvents vanishing at the Frobenius trace mod p.
pub fn frobenius_candidates(rset: &ResolventSet, disc: &Integer, p: u64) -> Result<Vec<usize>> {
    if disc.is_divisible_u(p as u32) {
        return Err(Error::BadPrime(p, "bad reduction".into()));
    }
    let t = frobenius_trace(&rset.f, p)?;
    Ok(rset
        .resolvents
        .iter()
        .enumerate()
        .filter(|(_, g)| fp::eval(&g.reduce(p), t, p) == 0)
        .map(|(i, _)| i)
        .collect())
}

/// The class of Frob_p, when exactly one resolvent vanishes.
pub fn frobenius_class(rset: &ResolventSet, curve: &CurveModel, p: u64) -> Result<usize> {
    let c = frobenius_candidates(rset, &curve.discriminant(), p)?;
    match c.as_slice() {
        [one] => Ok(*one),
        [] => Err(Error::BadPrime(p, "no resolvent vanishes".into())),
        _ => Err(Error::Ambiguous(p)),
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum Outcome {
    Class { label: usize },
    Ambiguous { labels: Vec<usize> },
    Bad { reason: String },
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PrimeRecord {
    pub p: u64,
    pub outcome: Outcome,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    ImageEqualsH,
    Inconclusive,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct FrobeniusReport {
    pub curve: CurveModel,
    pub modulus: u32,
    pub digits: u32,
    pub conjugates_tested: usize,
    pub conjugates_passing: usize,
    pub f_degree: usize,
    pub f_bound_log10: f64,
    pub resolvent_bound_log10: f64,
    pub h_exponent: u32,
    pub classes: Vec<ClassInfo>,
    pub records: Vec<PrimeRecord>,
    pub observed: Vec<usize>,
    pub unobserved: Vec<usize>,
    pub first_split_prime: Option<u64>,
    /// Index (in the maximal-subgroup list) of a maximal subgroup meeting
    /// every observed class, if any.
    pub covering_maximal: Option<usize>,
    pub maximal_subgroups: usize,
    pub verdict: Verdict,
}

/// Class labels of H met by each maximal subgroup of H.
pub fn maximal_class_hits(h: &FiniteGroup) -> Vec<BTreeSet<usize>> {
    let (_, map) = h.class_map();
    maximal_subgroups_finite(h)
        .iter()
        .map(|(m, _)| m.elements.iter().map(|x| map[x]).collect())
        .collect()
}

/// Whether every maximal subgroup of g misses at least one class of g.
pub fn maximal_subgroups_miss_a_class(g: &FiniteGroup) -> bool {
    let total = g.conjugacy_classes().len();
    maximal_class_hits(g).iter().all(|hit| hit.len() < total)
}

pub fn primes_up_to(bound: u64) -> Vec<u64> {
    if bound < 2 {
        return Vec::new();
    }
    let n = bound as usize;
    let mut sieve = vec![true; n + 1];
    sieve[0] = false;
    sieve[1] = false;
    let mut i = 2;
    while i * i <= n {
        if sieve[i] {
            for j in (i * i..=n).step_by(i) {
                sieve[j] = false;
            }
        }
        i += 1;
    }
    (0..=n).filter(|&i| sieve[i]).map(|i| i as u64).collect()
}

/// Table, F, identification and resolvents, escalating precision on failure.
pub fn prepare(
    e: &CurveModel,
    n: u32,
    h: &FiniteGroup,
    cfg: &ProverConfig,
) -> Result<(TorsionTable, Identification, ResolventSet)> {
    if !(n.is_power_of_two() && (2..=16).contains(&n)) {
        return Err(Error::Modulus(n));
    }
    if h.ring.modulus() != n {
        return Err(Error::Modulus(h.ring.modulus()));
    }
    let mut digits = cfg.start_digits(n);
    loop {
        let attempt = (|| {
            let table = torsion_table(e, n, digits)?;
            let f = build_f(&table, cfg.guard)?;
            let ident = identify_conjugate(&table, h, cfg.guard);
            let conj = match ident.passing.len() {
                0 => return Err(Error::NoConjugate),
                1 => ident.passing[0].clone(),
                k => return Err(Error::AmbiguousConjugate(k)),
            };
            let rset = build_resolvents(&table, &f, h, &conj, cfg.guard)?;
            Ok((table, ident, rset))
        })();
        match attempt {
            Err(Error::InsufficientPrecision(msg)) => {
                if digits >= cfg.max_digits {
                    return Err(Error::InsufficientPrecision(format!("{msg} (cap {} digits)", cfg.max_digits)));
                }
                digits = (digits * 2).min(cfg.max_digits);
            }
            other => return other,
        }
    }
}

/// Sweep the good primes up to `prime_bound` and decide whether the image
/// of the mod-N representation equals H.
pub fn sweep(rset: &ResolventSet, ident: &Identification, curve: &CurveModel, prime_bound: u64) -> FrobeniusReport {
    let disc = curve.discriminant();
    let id = rset.identity_label();
    let mut records = Vec::new();
    let mut observed = BTreeSet::new();
    let mut first_split_prime = None;
    for p in primes_up_to(prime_bound).into_iter().filter(|&p| p > 2) {
        let outcome = match frobenius_candidates(rset, &disc, p) {
            Ok(c) if c.len() == 1 => {
                observed.insert(c[0]);
                if c[0] == id && first_split_prime.is_none() {
                    first_split_prime = Some(p);
                }
                Outcome::Class { label: c[0] }
            }
            Ok(c) if c.is_empty() => Outcome::Bad { reason: "no resolvent vanishes".into() },
            Ok(c) if c.contains(&id) && curve.torsion_is_rational(rset.n as u64, p) => {
                observed.insert(id);
                if first_split_prime.is_none() {
                    first_split_prime = Some(p);
                }
                Outcome::Class { label: id }
            }
            Ok(c) => Outcome::Ambiguous { labels: c },
            // F degenerates mod p; Frob_p = I can still be read off E(F_p)
            Err(Error::BadPrime(..)) if !disc.is_divisible_u(p as u32) && curve.torsion_is_rational(rset.n as u64, p) => {
                observed.insert(id);
                if first_split_prime.is_none() {
                    first_split_prime = Some(p);
                }
                Outcome::Class { label: id }
            }
            Err(e) => Outcome::Bad { reason: e.to_string() },
        };
        records.push(PrimeRecord { p, outcome });
    }
    let hits = maximal_class_hits(&rset.h);
    let covering_maximal = hits.iter().position(|hit| observed.is_subset(hit));
    let verdict = if covering_maximal.is_none() { Verdict::ImageEqualsH } else { Verdict::Inconclusive };
    let unobserved = (0..rset.classes.len()).filter(|c| !observed.contains(c)).collect();
    FrobeniusReport {
        curve: curve.clone(),
        modulus: rset.n,
        digits: rset.digits,
        conjugates_tested: ident.tested,
        conjugates_passing: ident.passing.len(),
        f_degree: rset.f.degree(),
        f_bound_log10: rset.f_bound_log10,
        resolvent_bound_log10: rset.resolvent_bound_log10,
        h_exponent: rset.h_exponent,
        classes: rset.classes.clone(),
        records,
        observed: observed.into_iter().collect(),
        unobserved,
        first_split_prime,
        covering_maximal,
        maximal_subgroups: hits.len(),
        verdict,
    }
}

/// H mod N as a finite group; H may have any level.
pub fn subgroup_mod(h: &OpenSubgroup, n: u32) -> Result<FiniteGroup> {
    if !(n.is_power_of_two() && (2..=16).contains(&n)) {
        return Err(Error::Modulus(n));
    }
    Ok(h.reduce(n.trailing_zeros()))
}

pub fn certify_image(
    e: &CurveModel,
    n: u32,
    h: &OpenSubgroup,
    prime_bound: u64,
    cfg: &ProverConfig,
) -> Result<FrobeniusReport> {
    let hm = subgroup_mod(h, n)?;
    let (_, ident, rset) = prepare(e, n, &hm, cfg)?;
    Ok(sweep(&rset, &ident, e, prime_bound))
}

/// Exact-order labels grouped into orbits of ⟨A⟩ under the row action.
pub fn orbit_sizes(ring: &MatRing, a: u32) -> Vec<usize> {
    let n = ring.modulus();
    let mut seen: HashMap<(u32, u32), ()> = HashMap::new();
    let mut out = Vec::new();
    for c in 0..n {
        for d in 0..n {
            if vector_order(c, d, n) != n || seen.contains_key(&(c, d)) {
                continue;
            }
            let mut v = (c, d);
            let mut len = 0;
            while seen.insert(v, ()).is_none() {
                len += 1;
                v = ring.act_row(v, a);
            }
            out.push(len);
        }
    }
    out.sort_unstable();
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn full(n: u32) -> FiniteGroup {
        FiniteGroup::full(MatRing::new(n))
    }

    #[test]
    fn primes() {
        assert_eq!(primes_up_to(30), vec![2, 3, 5, 7, 11, 13, 17, 19, 23, 29]);
        assert!(primes_up_to(1).is_empty());
    }

    #[test]
    fn conjugates_of_borel_mod_2() {
        let r = MatRing::new(2);
        let b = FiniteGroup::closure(r, &[r.pack([1, 1, 0, 1])]);
        assert_eq!(conjugates(&b).len(), 3);
        assert_eq!(conjugates(&full(4)).len(), 1);
    }

    #[test]
    fn f_degree_mod_4() {
        let e = CurveModel::new([1, -1, 1, -3, 5]).unwrap();
        let t = torsion_table(&e, 4, 80).unwrap();
        let f = build_f(&t, 10).unwrap();
        assert_eq!(f.poly.degree(), 12);
        assert_eq!(f.poly.leading(), 1);
    }

    #[test]
    fn identity_resolvent_is_sum_of_fourth_powers() {
        let e = CurveModel::new([0, 0, 1, -1, 0]).unwrap();
        let t = torsion_table(&e, 2, 80).unwrap();
        let f = build_f(&t, 10).unwrap();
        let h = full(2);
        let ident = identify_conjugate(&t, &h, 10);
        assert_eq!((ident.tested, ident.passing.len()), (1, 1));
        let rs = build_resolvents(&t, &f, &h, &ident.passing[0], 10).unwrap();
        let id = rs.identity_label();
        assert_eq!(rs.resolvents[id].degree(), 1);
        // root = Σ a⁴ = power sum P4 of F
        let fc: Vec<Integer> = f.poly.coeffs.clone();
        // Newton: F = x³ + c2x² + c1x + c0
        let (c0, c1, c2) = (&fc[0], &fc[1], &fc[2]);
        let p1 = Integer::from(-c2);
        let p2 = Integer::from(&p1 * &p1) - 2 * c1.clone();
        let p3: Integer = -(Integer::from(c2 * &p2) + Integer::from(c1 * &p1) + Integer::from(3 * c0));
        let p4: Integer = -(Integer::from(c2 * &p3) + Integer::from(c1 * &p2) + Integer::from(c0 * &p1));
        assert_eq!(rs.resolvents[id].coeffs[0], -p4);
        let total: usize = rs.resolvents.iter().map(|g| g.degree()).sum();
        assert_eq!(total, 6);
    }

    #[test]
    fn f_constant_on_two_torsion_when_a1_is_one() {
        // 8y = -4(a1x + a3) on E[2], so 4x + 8y = -4a3 when a1 = 1
        let e = CurveModel::new([1, -1, 1, -3, 5]).unwrap();
        let t = torsion_table(&e, 2, 60).unwrap();
        assert!(matches!(build_f(&t, 10), Err(Error::RepeatedRoots(_))));
    }

    #[test]
    fn jordan_coverage_gl2_z4() {
        for g in gl2tower_core::signature::all_subgroups(MatRing::new(4)) {
            assert!(maximal_subgroups_miss_a_class(&g));
        }
    }

    #[test]
    fn orbit_sizes_identity() {
        let r = MatRing::new(4);
        assert_eq!(orbit_sizes(&r, r.identity()), vec![1; 12]);
        assert_eq!(orbit_sizes(&r, r.minus_identity()), vec![2; 6]);
    }
}
