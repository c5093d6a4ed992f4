//! Polynomials over F_p, p < 2^32, coefficients from the constant term up.

pub type Poly = Vec<u64>;

pub fn trim(mut a: Poly) -> Poly {
    while a.last() == Some(&0) {
        a.pop();
    }
    a
}

#[inline]
fn mulm(a: u64, b: u64, p: u64) -> u64 {
    ((a as u128 * b as u128) % p as u128) as u64
}

pub fn pow_mod(mut b: u64, mut e: u64, p: u64) -> u64 {
    let mut r = 1 % p;
    b %= p;
    while e > 0 {
        if e & 1 == 1 {
            r = mulm(r, b, p);
        }
        b = mulm(b, b, p);
        e >>= 1;
    }
    r
}

pub fn inv(a: u64, p: u64) -> u64 {
    pow_mod(a, p - 2, p)
}

pub fn eval(a: &[u64], x: u64, p: u64) -> u64 {
    a.iter().rev().fold(0, |acc, &c| (mulm(acc, x, p) + c) % p)
}

pub fn add(a: &[u64], b: &[u64], p: u64) -> Poly {
    let n = a.len().max(b.len());
    trim((0..n).map(|i| (a.get(i).copied().unwrap_or(0) + b.get(i).copied().unwrap_or(0)) % p).collect())
}

pub fn sub(a: &[u64], b: &[u64], p: u64) -> Poly {
    let n = a.len().max(b.len());
    trim((0..n).map(|i| (a.get(i).copied().unwrap_or(0) + p - b.get(i).copied().unwrap_or(0)) % p).collect())
}

pub fn mul(a: &[u64], b: &[u64], p: u64) -> Poly {
    if a.is_empty() || b.is_empty() {
        return Vec::new();
    }
    let mut out = vec![0u128; a.len() + b.len() - 1];
    let pp = p as u128;
    for (i, &x) in a.iter().enumerate() {
        if x == 0 {
            continue;
        }
        for (j, &y) in b.iter().enumerate() {
            let t = &mut out[i + j];
            *t += x as u128 * y as u128;
            if *t >= pp << 64 {
                *t %= pp;
            }
        }
    }
    trim(out.into_iter().map(|v| (v % pp) as u64).collect())
}

/// Remainder of a modulo a nonzero polynomial m.
pub fn rem(a: &[u64], m: &[u64], p: u64) -> Poly {
    let dm = m.len() - 1;
    let li = inv(*m.last().expect("nonzero modulus"), p);
    let mut r = a.to_vec();
    while r.len() > dm {
        let c = mulm(*r.last().unwrap(), li, p);
        let shift = r.len() - 1 - dm;
        if c != 0 {
            for (i, &mi) in m.iter().enumerate() {
                let t = &mut r[shift + i];
                *t = (*t + p - mulm(c, mi, p)) % p;
            }
        }
        r.pop();
    }
    trim(r)
}

pub fn divrem(a: &[u64], m: &[u64], p: u64) -> (Poly, Poly) {
    let dm = m.len() - 1;
    if a.len() <= dm {
        return (Vec::new(), trim(a.to_vec()));
    }
    let li = inv(*m.last().unwrap(), p);
    let mut r = a.to_vec();
    let mut q = vec![0; a.len() - dm];
    while r.len() > dm {
        let c = mulm(*r.last().unwrap(), li, p);
        let shift = r.len() - 1 - dm;
        q[shift] = c;
        for (i, &mi) in m.iter().enumerate() {
            let t = &mut r[shift + i];
            *t = (*t + p - mulm(c, mi, p)) % p;
        }
        r.pop();
    }
    (trim(q), trim(r))
}

pub fn mul_mod(a: &[u64], b: &[u64], m: &[u64], p: u64) -> Poly {
    rem(&mul(a, b, p), m, p)
}

/// a^e mod m.
pub fn pow_poly_mod(a: &[u64], mut e: u128, m: &[u64], p: u64) -> Poly {
    let mut base = rem(a, m, p);
    let mut r = rem(&[1], m, p);
    while e > 0 {
        if e & 1 == 1 {
            r = mul_mod(&r, &base, m, p);
        }
        e >>= 1;
        if e > 0 {
            base = mul_mod(&base, &base, m, p);
        }
    }
    r
}

pub fn monic(a: &[u64], p: u64) -> Poly {
    match a.last() {
        None => Vec::new(),
        Some(&l) => {
            let li = inv(l, p);
            a.iter().map(|&c| mulm(c, li, p)).collect()
        }
    }
}

pub fn gcd(a: &[u64], b: &[u64], p: u64) -> Poly {
    let (mut a, mut b) = (trim(a.to_vec()), trim(b.to_vec()));
    while !b.is_empty() {
        let r = rem(&a, &b, p);
        a = b;
        b = r;
    }
    monic(&a, p)
}

pub fn derivative(a: &[u64], p: u64) -> Poly {
    trim(a.iter().enumerate().skip(1).map(|(i, &c)| mulm(c, i as u64 % p, p)).collect())
}

pub fn is_squarefree(a: &[u64], p: u64) -> bool {
    let a = trim(a.to_vec());
    a.len() > 1 && gcd(&a, &derivative(&a, p), p).len() == 1
}

/// Distinct-degree factorization of a squarefree polynomial: pairs (d, g_d)
/// where g_d is the product of the monic irreducible factors of degree d.
pub fn distinct_degree(f: &[u64], p: u64) -> Vec<(usize, Poly)> {
    let mut f = monic(f, p);
    let mut out = Vec::new();
    let x = vec![0, 1];
    let mut h = x.clone();
    let mut d = 0;
    while f.len() > 1 {
        d += 1;
        if 2 * d > f.len() - 1 {
            out.push((f.len() - 1, f.clone()));
            break;
        }
        h = pow_poly_mod(&h, p as u128, &f, p);
        let g = gcd(&f, &sub(&h, &x, p), p);
        if g.len() > 1 {
            f = divrem(&f, &g, p).0;
            h = rem(&h, &f, p);
            out.push((d, g));
        }
    }
    out
}

/// Newton power sums P_0..P_{n-1} of the roots of a monic polynomial.
pub fn power_sums(f: &[u64], n: usize, p: u64) -> Vec<u64> {
    let deg = f.len() - 1;
    // e_i with signs: f = x^deg + c_{deg-1} x^{deg-1} + ... ; P_k + c_{deg-1}P_{k-1} + ... + k c_{deg-k} = 0
    let c = |i: usize| f[deg - i]; // coefficient of x^{deg-i}
    let mut ps = vec![deg as u64 % p];
    for k in 1..n {
        let mut s = if k <= deg { mulm(k as u64 % p, c(k), p) } else { 0 };
        for i in 1..k.min(deg + 1) {
            s = (s + mulm(c(i), ps[k - i], p)) % p;
        }
        ps.push((p - s) % p);
    }
    ps
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn arithmetic() {
        let p = 7;
        let a = vec![1, 2, 3];
        let b = vec![6, 1];
        let (q, r) = divrem(&mul(&a, &b, p), &b, p);
        assert_eq!(q, a);
        assert!(r.is_empty());
        assert_eq!(gcd(&mul(&a, &b, p), &mul(&b, &b, p), p), monic(&b, p));
        assert_eq!(eval(&a, 2, p), (1 + 4 + 12) % 7);
    }

    #[test]
    fn ddf_counts_factors() {
        // x^8 - x over F_2... use p = 5: x^5 - x splits into 5 linear factors
        let p = 5;
        let f = vec![0, 4, 0, 0, 0, 1];
        let ddf = distinct_degree(&f, p);
        assert_eq!(ddf, vec![(1, f.clone())]);
        // (x^2 + 2)(x - 1) over F_5: x^2 + 2 irreducible (−2 = 3 non-square)
        let g = mul(&[2, 0, 1], &[4, 1], p);
        let ddf = distinct_degree(&g, p);
        assert_eq!(ddf.iter().map(|(d, g)| (*d, g.len() - 1)).collect::<Vec<_>>(), vec![(1, 1), (2, 2)]);
    }

    #[test]
    fn newton_sums() {
        // roots 1, 2, 3 mod 101
        let p = 101;
        let f = mul(&mul(&[100, 1], &[99, 1], p), &[98, 1], p);
        let ps = power_sums(&f, 6, p);
        for (k, &v) in ps.iter().enumerate() {
            let want = (1 + 2u64.pow(k as u32) + 3u64.pow(k as u32)) % p;
            assert_eq!(v, want, "k = {k}");
        }
    }
}
