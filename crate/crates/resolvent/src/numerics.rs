//! Period lattices and complex torsion points.
//!
//! The model is completed to Y² = 4X³ − g2X − g3 with X = x + b2/12 and
//! Y = 2y + a1x + a3, g2 = c4/12, g3 = c6/216. Periods come from the complex
//! AGM on the roots e1, e2, e3 and are checked against g2, g3 through the
//! Eisenstein series of the reduced basis.

use crate::curve::CurveModel;
use crate::error::{Error, Result};
use rug::float::Constant;
use rug::ops::Pow;
use rug::{Complex, Float, Integer};

pub fn bits_for_digits(digits: u32) -> u32 {
    (digits as f64 * std::f64::consts::LOG2_10).ceil() as u32 + 64
}

fn cx(prec: u32, re: f64, im: f64) -> Complex {
    Complex::with_val(prec, (re, im))
}

fn abs(z: &Complex) -> Float {
    Float::with_val(z.prec().0, z.abs_ref())
}

/// 2^-k as a Float.
fn eps(prec: u32, k: u32) -> Float {
    Float::with_val(prec, 1) >> k
}

/// z^k by repeated squaring; Complex::pow goes through the slow exact path.
pub fn cpow(z: &Complex, mut k: u32) -> Complex {
    let prec = z.prec().0;
    let mut base = z.clone();
    let mut r = Complex::with_val(prec, 1);
    while k > 0 {
        if k & 1 == 1 {
            r *= &base;
        }
        k >>= 1;
        if k > 0 {
            base.square_mut();
        }
    }
    r
}

fn pi(prec: u32) -> Float {
    Float::with_val(prec, Constant::Pi)
}

/// Roots of the monic polynomial with the given coefficients (constant term
/// first) by Durand–Kerner iteration.
pub fn poly_roots(coeffs: &[Complex], prec: u32) -> Result<Vec<Complex>> {
    let n = coeffs.len() - 1;
    let eval = |z: &Complex| {
        let mut acc = Complex::with_val(prec, 1);
        for c in coeffs[..n].iter().rev() {
            acc *= z;
            acc += c;
        }
        // monic leading term
        let mut acc2 = Complex::with_val(prec, 0);
        let mut zp = Complex::with_val(prec, 1);
        for c in coeffs[..n].iter() {
            acc2 += Complex::with_val(prec, c * &zp);
            zp *= z;
        }
        acc2 + zp
    };
    let bound = coeffs[..n].iter().map(|c| abs(c).to_f64()).fold(1.0, f64::max) + 1.0;
    let seed = cx(prec, 0.4, 0.9);
    let mut z: Vec<Complex> = (0..n)
        .map(|k| cpow(&seed, k as u32) * bound)
        .collect();
    let tol = eps(prec, prec.saturating_sub(16));
    for _ in 0..(200 + prec as usize) {
        let mut delta_max = Float::with_val(prec, 0);
        for i in 0..n {
            let mut den = Complex::with_val(prec, 1);
            for j in 0..n {
                if i != j {
                    den *= Complex::with_val(prec, &z[i] - &z[j]);
                }
            }
            let d = Complex::with_val(prec, eval(&z[i]) / den);
            let ad = abs(&d) / (abs(&z[i]) + 1u32);
            if ad > delta_max {
                delta_max = ad;
            }
            z[i] -= d;
        }
        if delta_max < tol {
            return Ok(z);
        }
    }
    Err(Error::InsufficientPrecision("root finding did not converge".into()))
}

/// Complex AGM with the optimal branch of the square root at every step.
pub fn agm(a: &Complex, b: &Complex, prec: u32) -> Complex {
    let (mut a, mut b) = (a.clone(), b.clone());
    let tol = eps(prec, prec.saturating_sub(8));
    for _ in 0..(prec as usize + 64) {
        let a1 = Complex::with_val(prec, &a + &b) / 2u32;
        let mut b1 = Complex::with_val(prec, &a * &b).sqrt();
        if abs(&Complex::with_val(prec, &a1 - &b1)) > abs(&Complex::with_val(prec, &a1 + &b1)) {
            b1 = -b1;
        }
        a = a1;
        b = b1;
        if abs(&Complex::with_val(prec, &a - &b)) <= Float::with_val(prec, &tol * abs(&a)) {
            break;
        }
    }
    a
}

#[derive(Clone, Debug)]
pub struct Periods {
    /// Basis with τ = w2/w1 in the standard fundamental domain.
    pub w1: Complex,
    pub w2: Complex,
    pub prec: u32,
    pub g2: Float,
    pub g3: Float,
}

impl Periods {
    pub fn tau(&self) -> Complex {
        Complex::with_val(self.prec, &self.w2 / &self.w1)
    }
}

/// (Σ n³qⁿ/(1−qⁿ), Σ n⁵qⁿ/(1−qⁿ)) for E4 and E6.
fn lambert(q: &Complex, prec: u32) -> (Complex, Complex) {
    let mut s3 = Complex::with_val(prec, 0);
    let mut s5 = Complex::with_val(prec, 0);
    let mut qn = q.clone();
    let tol = eps(prec, prec + 16);
    let mut n = 1u32;
    while abs(&qn) * Float::with_val(prec, n).pow(6u32) > tol {
        let t = Complex::with_val(prec, &qn / Complex::with_val(prec, 1 - &qn));
        let nf = Float::with_val(prec, n);
        s3 += Complex::with_val(prec, &t * Float::with_val(prec, nf.clone().pow(3u32)));
        s5 += Complex::with_val(prec, &t * Float::with_val(prec, nf.pow(5u32)));
        qn *= q;
        n += 1;
    }
    (s3, s5)
}

/// (g2, g3) of the lattice Zw1 + Zw2 from Eisenstein series.
fn lattice_invariants(w1: &Complex, w2: &Complex, prec: u32) -> (Complex, Complex) {
    let tau = Complex::with_val(prec, w2 / w1);
    let two_pi_i = Complex::with_val(prec, (0, 2 * pi(prec)));
    let q = Complex::with_val(prec, &two_pi_i * &tau).exp();
    let (s3, s5) = lambert(&q, prec);
    let e4 = Complex::with_val(prec, 1 + 240 * s3);
    let e6 = Complex::with_val(prec, 1 - 504 * s5);
    let p = pi(prec);
    let g2 = Complex::with_val(prec, e4 * Float::with_val(prec, p.clone().pow(4u32)) * 4u32 / 3u32)
        / cpow(w1, 4);
    let g3 = Complex::with_val(prec, e6 * Float::with_val(prec, p.pow(6u32)) * 8u32 / 27u32)
        / cpow(w1, 6);
    (g2, g3)
}

fn reduce_basis(mut w1: Complex, mut w2: Complex, prec: u32) -> Option<(Complex, Complex)> {
    let tau = Complex::with_val(prec, &w2 / &w1);
    if tau.imag().is_zero() || abs(&Complex::with_val(prec, tau.imag())) < eps(prec, prec / 2) {
        return None;
    }
    if tau.imag().is_sign_negative() {
        w2 = -w2;
    }
    for _ in 0..1000 {
        let tau = Complex::with_val(prec, &w2 / &w1);
        let n = Float::with_val(prec, tau.real().clone().round());
        w2 -= Complex::with_val(prec, &w1 * &n);
        let tau = Complex::with_val(prec, &w2 / &w1);
        if abs(&tau) < Float::with_val(prec, 1) - eps(prec, prec / 2) {
            let nw1 = w2.clone();
            w2 = -w1;
            w1 = nw1;
        } else {
            return Some((w1, w2));
        }
    }
    None
}

pub fn period_lattice(e: &CurveModel, digits: u32) -> Result<Periods> {
    if digits < 30 {
        return Err(Error::InsufficientPrecision("period computation needs at least 30 digits".into()));
    }
    let prec = bits_for_digits(digits);
    let g2 = Float::with_val(prec, &e.c4()) / 12u32;
    let g3 = Float::with_val(prec, &e.c6()) / 216u32;
    // 4X³ − g2X − g3, made monic
    let coeffs = [
        Complex::with_val(prec, -Float::with_val(prec, &g3 / 4u32)),
        Complex::with_val(prec, -Float::with_val(prec, &g2 / 4u32)),
        Complex::with_val(prec, 0),
        Complex::with_val(prec, 1),
    ];
    let roots = poly_roots(&coeffs, prec)?;
    let p = pi(prec);
    let mut cands = Vec::new();
    for i in 0..3 {
        let (j, k) = ((i + 1) % 3, (i + 2) % 3);
        let a = Complex::with_val(prec, &roots[i] - &roots[j]).sqrt();
        let b = Complex::with_val(prec, &roots[i] - &roots[k]).sqrt();
        let m = agm(&a, &b, prec);
        cands.push(Complex::with_val(prec, Complex::with_val(prec, (&p, 0)) / m));
    }
    let mut basis_cands = Vec::new();
    for i in 0..3 {
        for j in 0..3 {
            if i != j {
                basis_cands.push((cands[i].clone(), cands[j].clone()));
                let half = Complex::with_val(prec, &cands[i] + &cands[j]) / 2u32;
                basis_cands.push((cands[i].clone(), half));
            }
        }
    }
    let g2c = Complex::with_val(prec, (&g2, 0));
    let g3c = Complex::with_val(prec, (&g3, 0));
    let scale = abs(&g2c).max(&abs(&g3c)) + 1u32;
    let tol = Float::with_val(prec, 10).pow(-(digits as i32) / 2) * &scale;
    for (a, b) in basis_cands {
        let Some((w1, w2)) = reduce_basis(a, b, prec) else { continue };
        let (h2, h3) = lattice_invariants(&w1, &w2, prec);
        if abs(&Complex::with_val(prec, &h2 - &g2c)) < tol && abs(&Complex::with_val(prec, &h3 - &g3c)) < tol {
            return Ok(Periods { w1, w2, prec, g2, g3 });
        }
    }
    Err(Error::InsufficientPrecision("no period basis matched g2, g3".into()))
}

/// ℘(z) and ℘'(z) by the q-expansion in the basis (w1, w2).
pub fn weierstrass_p(z: &Complex, per: &Periods) -> (Complex, Complex) {
    let prec = per.prec;
    let tau = per.tau();
    let two_pi_i = Complex::with_val(prec, (0, 2 * pi(prec)));
    let q = Complex::with_val(prec, &two_pi_i * &tau).exp();
    // u = z/w1 reduced to 0 <= Im(u)/Im(tau) < 1, |Re u| <= 1/2
    let mut u = Complex::with_val(prec, z / &per.w1);
    let t = Float::with_val(prec, u.imag() / tau.imag()).floor();
    u -= Complex::with_val(prec, &tau * &t);
    let r = Float::with_val(prec, u.real().clone().round());
    u -= r;
    let w = Complex::with_val(prec, &two_pi_i * &u).exp();
    let winv = Complex::with_val(prec, w.clone().recip());
    let c = Complex::with_val(prec, &two_pi_i / &per.w1);
    let one = Complex::with_val(prec, 1);
    let term_p = |v: &Complex| {
        let d = Complex::with_val(prec, &one - v);
        Complex::with_val(prec, v / Complex::with_val(prec, d.square()))
    };
    let term_d = |v: &Complex| {
        let d = Complex::with_val(prec, &one - v);
        Complex::with_val(prec, v * Complex::with_val(prec, &one + v)) / cpow(&d, 3)
    };
    let mut sp = Complex::with_val(prec, Float::with_val(prec, 1) / 12u32) + term_p(&w);
    let mut sd = term_d(&w);
    let mut qn = q.clone();
    let tol = eps(prec, prec + 16);
    while abs(&qn) > Float::with_val(prec, &tol * Float::with_val(prec, abs(&w).min(&abs(&winv)))) {
        let v1 = Complex::with_val(prec, &qn * &w);
        let v2 = Complex::with_val(prec, &qn * &winv);
        sp += term_p(&v1) + term_p(&v2) - Complex::with_val(prec, term_p(&qn) * 2u32);
        sd += term_d(&v1) - term_d(&v2);
        qn *= &q;
    }
    let c2 = Complex::with_val(prec, c.clone().square());
    let c3 = Complex::with_val(prec, &c2 * &c);
    (sp * c2, sd * c3)
}

/// Scaling constants s1(N), s2(N) for f(P) = s1·x(P) + s2·y(P).
pub fn s1(n: u32) -> u32 {
    match n {
        2 => 4,
        _ => match gl2tower_core::residue::prime_power(n) {
            Some((p, _)) if n > 2 => p,
            _ => 1,
        },
    }
}

/// s2 actually used for f-values: 4 at N = 4, where 2y(P) need not be
/// integral when a1 is odd (ord y(P) >= -3/2 ord 2 for P of order 4).
pub fn s2_effective(n: u32) -> u32 {
    if n == 4 {
        4
    } else {
        s2(n)
    }
}

pub fn s2(n: u32) -> u32 {
    match n {
        2 => 8,
        3 => 9,
        _ => match gl2tower_core::residue::prime_power(n) {
            Some((p, _)) if n > 3 => p,
            _ => 1,
        },
    }
}

#[derive(Clone, Debug)]
pub struct TorsionTable {
    pub n: u32,
    pub digits: u32,
    pub periods: Periods,
    curve: CurveModel,
    /// Indexed by c·N + d; entry 0 (the origin) is unused.
    points: Vec<(Complex, Complex)>,
}

/// Additive order of (c, d) in (Z/N)².
pub fn vector_order(c: u32, d: u32, n: u32) -> u32 {
    let g = gl2tower_core::residue::gcd(gl2tower_core::residue::gcd(c as i64, d as i64), n as i64) as u32;
    n / g
}

impl TorsionTable {
    pub fn point(&self, c: u32, d: u32) -> &(Complex, Complex) {
        let n = self.n;
        assert!((c % n, d % n) != (0, 0), "origin has no affine coordinates");
        &self.points[((c % n) * n + d % n) as usize]
    }

    pub fn curve(&self) -> &CurveModel {
        &self.curve
    }

    pub fn prec(&self) -> u32 {
        self.periods.prec
    }

    pub fn f_value(&self, c: u32, d: u32) -> Complex {
        let (x, y) = self.point(c, d);
        let prec = self.prec();
        Complex::with_val(prec, x * s1(self.n)) + Complex::with_val(prec, y * s2_effective(self.n))
    }

    /// Index pairs of the points of exact order N, in lexicographic order.
    pub fn exact_order_labels(&self) -> Vec<(u32, u32)> {
        let n = self.n;
        (0..n).flat_map(|c| (0..n).map(move |d| (c, d))).filter(|&(c, d)| vector_order(c, d, n) == n).collect()
    }

    /// Elliptic sum of two table entries on the input model.
    pub fn add(&self, p: &(Complex, Complex), q: &(Complex, Complex)) -> Option<(Complex, Complex)> {
        add_points(&self.curve, p, q, self.prec())
    }
}

/// Chord-and-tangent addition on the long model; None for P + Q = O.
pub fn add_points(
    e: &CurveModel,
    p: &(Complex, Complex),
    q: &(Complex, Complex),
    prec: u32,
) -> Option<(Complex, Complex)> {
    let [a1, a2, a3, a4, a6] = e.a.map(|v| Float::with_val(prec, v));
    let (x1, y1) = p;
    let (x2, y2) = q;
    let close = |a: &Complex, b: &Complex| {
        abs(&Complex::with_val(prec, a - b)) < Float::with_val(prec, eps(prec, prec / 2) * (abs(a) + 1u32))
    };
    let (lambda, nu) = if close(x1, x2) {
        let den = Complex::with_val(prec, y1 * 2u32) + Complex::with_val(prec, x1 * &a1) + &a3;
        if abs(&den) < Float::with_val(prec, eps(prec, prec / 2) * (abs(y1) + 1u32)) {
            return None;
        }
        let x1sq = Complex::with_val(prec, x1.clone().square());
        let num_l = Complex::with_val(prec, &x1sq * 3u32) + Complex::with_val(prec, x1 * &a2) * 2u32 + &a4
            - Complex::with_val(prec, y1 * &a1);
        let num_n = -Complex::with_val(prec, &x1sq * x1) + Complex::with_val(prec, x1 * &a4) + Float::with_val(prec, &a6 * 2u32)
            - Complex::with_val(prec, y1 * &a3);
        (Complex::with_val(prec, &num_l / &den), Complex::with_val(prec, &num_n / &den))
    } else {
        let den = Complex::with_val(prec, x2 - x1);
        let l = Complex::with_val(prec, y2 - y1) / &den;
        let n = (Complex::with_val(prec, y1 * x2) - Complex::with_val(prec, y2 * x1)) / den;
        (l, n)
    };
    let x3 = Complex::with_val(prec, lambda.clone().square()) + Complex::with_val(prec, &lambda * &a1) - &a2 - x1 - x2;
    let y3 = -Complex::with_val(prec, Complex::with_val(prec, &lambda + &a1) * &x3) - &nu - &a3;
    Some((x3, y3))
}

/// Torsion points P(c, d) = image of (c·w1 + d·w2)/N, on the input model.
pub fn torsion_table(e: &CurveModel, n: u32, digits: u32) -> Result<TorsionTable> {
    if n < 2 || n > 64 {
        return Err(Error::Modulus(n));
    }
    let per = period_lattice(e, digits)?;
    let prec = per.prec;
    let [a1, _, a3, _, _] = e.a.map(|v| Float::with_val(prec, v));
    let b2 = Float::with_val(prec, &e.b2()) / 12u32;
    let mut points = vec![(cx(prec, 0.0, 0.0), cx(prec, 0.0, 0.0)); (n * n) as usize];
    let tol = Float::with_val(prec, 10).pow(6 - digits as i32);
    for c in 0..n {
        for d in 0..n {
            if (c, d) == (0, 0) {
                continue;
            }
            let z = (Complex::with_val(prec, &per.w1 * c) + Complex::with_val(prec, &per.w2 * d)) / n;
            let (wp, wpd) = weierstrass_p(&z, &per);
            let x = Complex::with_val(prec, &wp - &b2);
            let y = (wpd - Complex::with_val(prec, &x * &a1) - &a3) / 2u32;
            // residual of the model equation, relative to the size of the point
            let [ia1, ia2, ia3, ia4, ia6] = e.a;
            let lhs = Complex::with_val(prec, y.clone().square())
                + Complex::with_val(prec, &x * &y) * ia1
                + Complex::with_val(prec, &y * ia3);
            let rhs = cpow(&x, 3)
                + Complex::with_val(prec, x.clone().square()) * ia2
                + Complex::with_val(prec, &x * ia4)
                + ia6;
            let size = Float::with_val(prec, abs(&x) + 1u32).pow(3u32);
            if abs(&Complex::with_val(prec, lhs - rhs)) > Float::with_val(prec, &tol * &size) {
                return Err(Error::InsufficientPrecision(format!("torsion point ({c},{d}) off the curve")));
            }
            points[(c * n + d) as usize] = (x, y);
        }
    }
    Ok(TorsionTable { n, digits, periods: per, curve: e.clone(), points })
}

/// Digits needed so that a polynomial whose coefficients are bounded by
/// 10^bound_digits can be rounded with `guard` spare digits.
pub fn required_digits(bound_digits: f64, guard: u32) -> u32 {
    bound_digits.max(0.0).ceil() as u32 + guard + 10
}

/// log10 of the largest coefficient of ∏(X + |r_i|), which bounds the
/// coefficients of ∏(X − r_i).
pub fn coefficient_bound_log10(roots: &[Complex]) -> f64 {
    let prec = 128;
    let mut c: Vec<Float> = vec![Float::with_val(prec, 1)];
    for r in roots {
        let a = Float::with_val(prec, r.abs_ref());
        let mut next = vec![Float::with_val(prec, 0); c.len() + 1];
        for (i, ci) in c.iter().enumerate() {
            next[i + 1] += ci;
            next[i] += Float::with_val(prec, ci * &a);
        }
        c = next;
    }
    c.iter().map(|v| v.clone().log10().to_f64()).fold(f64::NEG_INFINITY, f64::max)
}

/// Expand ∏(X − r_i) and round to integers, checking that every coefficient
/// is within 10^-guard of an integer with negligible imaginary part.
pub fn round_product(roots: &[Complex], guard: u32, prec: u32) -> Result<Vec<Integer>> {
    let mut c: Vec<Complex> = vec![Complex::with_val(prec, 1)];
    for r in roots {
        let mut next = vec![Complex::with_val(prec, 0); c.len() + 1];
        for (i, ci) in c.iter().enumerate() {
            next[i + 1] += ci;
            next[i] -= Complex::with_val(prec, ci * r);
        }
        c = next;
    }
    let tol = Float::with_val(prec, 10).pow(-(guard as i32));
    c.iter()
        .map(|v| {
            let re = v.real().clone();
            let rounded = re.clone().round();
            let err = Float::with_val(prec, &re - &rounded).abs();
            let im = v.imag().clone().abs();
            if err > tol || im > tol {
                return Err(Error::InsufficientPrecision(format!(
                    "coefficient not within 10^-{guard} of an integer (error {:.3e})",
                    err.max(&im).to_f64()
                )));
            }
            Ok(rounded.to_integer().expect("finite"))
        })
        .collect()
}

pub fn complex_from_int(prec: u32, v: &Integer) -> Complex {
    Complex::with_val(prec, (Float::with_val(prec, v), 0))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lemniscatic_periods() {
        let e = CurveModel::new([0, 0, 0, -1, 0]).unwrap();
        let per = period_lattice(&e, 40).unwrap();
        let (a, b) = (abs(&per.w1), abs(&per.w2));
        let d = Float::with_val(per.prec, &a - &b).abs();
        assert!(d < 1e-30, "{a} {b}");
        // one period real, the other purely imaginary (up to the basis choice)
        let tau = per.tau();
        assert!(tau.real().clone().abs() < 1e-30 && (Float::with_val(per.prec, tau.imag() - 1u32).abs() < 1e-30));
        // real period 2.62205755429211981046...
        let w = abs(&per.w1).to_f64();
        assert!((w - 2.622057554292119).abs() < 1e-12, "{w}");
    }

    #[test]
    fn half_period_is_two_torsion() {
        let e = CurveModel::new([1, -1, 0, -7, 5]).unwrap();
        let per = period_lattice(&e, 50).unwrap();
        let half = Complex::with_val(per.prec, &per.w1 / 2u32);
        let (wp, wpd) = weierstrass_p(&half, &per);
        let x = wp - Float::with_val(per.prec, &e.b2()) / 12u32;
        // x must be a root of 4x³ + b2x² + 2b4x + b6, and ℘' vanishes
        let cubic = e.two_torsion_cubic();
        let mut acc = Complex::with_val(per.prec, 0);
        for c in cubic.coeffs.iter().rev() {
            acc *= &x;
            acc += Float::with_val(per.prec, c);
        }
        assert!(abs(&acc) < 1e-35);
        assert!(abs(&wpd) < 1e-35);
    }

    #[test]
    fn table_group_law_and_symmetry() {
        let e = CurveModel::new([0, 1, 0, -28, 48]).unwrap();
        let t = torsion_table(&e, 4, 40).unwrap();
        let n = 4;
        for (c, d, c2, d2) in [(1, 0, 0, 1), (1, 1, 2, 3), (3, 2, 1, 1), (1, 2, 1, 2)] {
            let s = t.add(t.point(c, d), t.point(c2, d2));
            let (sc, sd) = ((c + c2) % n, (d + d2) % n);
            if (sc, sd) == (0, 0) {
                assert!(s.is_none());
                continue;
            }
            let (x, y) = s.unwrap();
            let (ex, ey) = t.point(sc, sd);
            assert!(abs(&Complex::with_val(t.prec(), &x - ex)) < 1e-25);
            assert!(abs(&Complex::with_val(t.prec(), &y - ey)) < 1e-25);
        }
        for (c, d) in t.exact_order_labels() {
            let (x1, _) = t.point(c, d);
            let (x2, _) = t.point(n - c, (n - d) % n);
            assert!(abs(&Complex::with_val(t.prec(), x1 - x2)) < 1e-30);
        }
        assert_eq!(t.exact_order_labels().len(), 12);
    }

    #[test]
    fn scaling_constants() {
        assert_eq!((s1(2), s2(2)), (4, 8));
        assert_eq!((s1(3), s2(3)), (3, 9));
        assert_eq!((s1(4), s2(4)), (2, 2));
        assert_eq!((s1(16), s2(16)), (2, 2));
        assert_eq!((s1(6), s2(6)), (1, 1));
        assert_eq!(s2_effective(4), 4);
        assert_eq!(s2_effective(8), 2);
    }

    #[test]
    fn precision_escalation_agrees() {
        let e = CurveModel::new([0, 0, 1, -1, 0]).unwrap();
        let a = period_lattice(&e, 60).unwrap();
        let b = period_lattice(&e, 120).unwrap();
        let d = abs(&Complex::with_val(b.prec, &a.w1 - &b.w1));
        assert!(d < 1e-50);
    }
}
