//! Slow, independent oracles shared by the integration tests. Nothing here
//! calls into the library's arithmetic.
#![allow(dead_code)]

use nagao::HyperellipticFamily;
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::Zero;

pub fn is_prime_naive(n: u64) -> bool {
    n >= 2 && (2..).take_while(|d| d * d <= n).all(|d| n % d != 0)
}

pub fn primes_naive(lo: u64, hi: u64) -> Vec<u64> {
    (lo..=hi).filter(|&n| is_prime_naive(n)).collect()
}

fn md(v: i64, p: u64) -> u64 {
    v.rem_euclid(p as i64) as u64
}

/// Coefficients of the fiber at `t` over F_p, ascending in x, untrimmed.
pub fn fiber_poly(fam: &HyperellipticFamily, t: u64, p: u64) -> Vec<u64> {
    fam.coeffs
        .iter()
        .map(|c| c.iter().rev().fold(0, |acc, &k| (acc * t + md(k, p)) % p))
        .collect()
}

pub fn eval(f: &[u64], x: u64, p: u64) -> u64 {
    f.iter().rev().fold(0, |acc, &c| (acc * x + c) % p)
}

fn trim(mut f: Vec<u64>) -> Vec<u64> {
    while f.last() == Some(&0) {
        f.pop();
    }
    f
}

fn inv(a: u64, p: u64) -> u64 {
    (1..p).find(|&b| a * b % p == 1).expect("non-invertible")
}

fn poly_rem(mut a: Vec<u64>, b: &[u64], p: u64) -> Vec<u64> {
    let b = trim(b.to_vec());
    let lead_inv = inv(*b.last().unwrap(), p);
    a = trim(a);
    while a.len() >= b.len() {
        let shift = a.len() - b.len();
        let q = a.last().unwrap() * lead_inv % p;
        for (i, &c) in b.iter().enumerate() {
            a[shift + i] = (a[shift + i] + p - q * c % p) % p;
        }
        a = trim(a);
    }
    a
}

/// A fiber is singular when its x-degree drops or `f` has a repeated factor.
pub fn fiber_singular_naive(f: &[u64], degree: usize, p: u64) -> bool {
    if f[degree] == 0 {
        return true;
    }
    let df: Vec<u64> = (1..f.len()).map(|i| i as u64 % p * f[i] % p).collect();
    let (mut a, mut b) = (trim(f.to_vec()), trim(df));
    while !b.is_empty() {
        let r = poly_rem(a, &b, p);
        a = b;
        b = r;
    }
    a.len() > 1
}

fn sqrt_counts(p: u64) -> Vec<u64> {
    let mut c = vec![0; p as usize];
    for y in 0..p {
        c[(y * y % p) as usize] += 1;
    }
    c
}

/// `#C(F_p)` on the smooth model by enumerating (x, y) pairs.
pub fn naive_count_fp(f: &[u64], p: u64) -> u64 {
    let f = trim(f.to_vec());
    let mut n = 0;
    for x in 0..p {
        let v = eval(&f, x, p);
        n += (0..p).filter(|y| y * y % p == v).count() as u64;
    }
    let deg = f.len() - 1;
    n + if deg % 2 == 1 { 1 } else { sqrt_counts(p)[*f.last().unwrap() as usize] }
}

/// F_{p^2} as pairs `a + b w` with `w^2 = d`, `d` the least non-residue.
#[derive(Clone, Copy)]
pub struct Fq {
    p: u64,
    d: u64,
}

impl Fq {
    pub fn new(p: u64) -> Self {
        let sq = sqrt_counts(p);
        let d = (2..p).find(|&d| sq[d as usize] == 0).unwrap();
        Self { p, d }
    }
    fn mul(&self, x: (u64, u64), y: (u64, u64)) -> (u64, u64) {
        let p = self.p;
        ((x.0 * y.0 + self.d * (x.1 * y.1 % p)) % p, (x.0 * y.1 + x.1 * y.0) % p)
    }
    fn eval(&self, f: &[u64], x: (u64, u64)) -> (u64, u64) {
        f.iter().rev().fold((0, 0), |acc, &c| {
            let m = self.mul(acc, x);
            ((m.0 + c) % self.p, m.1)
        })
    }
}

/// `#C(F_{p^2})` on the smooth model by enumerating all of F_{p^2} for x and y.
pub fn naive_count_fp2(f: &[u64], p: u64) -> u64 {
    let f = trim(f.to_vec());
    let fq = Fq::new(p);
    let elems: Vec<(u64, u64)> = (0..p).flat_map(|a| (0..p).map(move |b| (a, b))).collect();
    let mut n = 0;
    for &x in &elems {
        let v = fq.eval(&f, x);
        n += elems.iter().filter(|&&y| fq.mul(y, y) == v).count() as u64;
    }
    // any nonzero element of F_p is a square in F_{p^2}
    n + if (f.len() - 1) % 2 == 1 { 1 } else { 2 }
}

/// `#J(F_p)` for `y^2 = f`, deg f = 5, by enumerating reduced Mumford pairs `(u, v)`.
pub fn jacobian_order_mumford(f: &[u64], p: u64) -> u64 {
    assert_eq!(trim(f.to_vec()).len(), 6, "quintic expected");
    let mut n = 1;
    for a in 0..p {
        let fa = eval(f, a, p);
        n += (0..p).filter(|b| b * b % p == fa).count() as u64;
    }
    for u1 in 0..p {
        for u0 in 0..p {
            let u = [u0, u1, 1];
            for v1 in 0..p {
                for v0 in 0..p {
                    let mut g = vec![v0 * v0 % p, 2 * v0 * v1 % p, v1 * v1 % p, 0, 0, 0];
                    for (gi, fi) in g.iter_mut().zip(f) {
                        *gi = (*gi + p - fi % p) % p;
                    }
                    if poly_rem(g, &u, p).is_empty() {
                        n += 1;
                    }
                }
            }
        }
    }
    n
}

type Point = Option<(BigRational, BigRational)>;

/// Addition on `y^2 = x^3 + a x + b` over Q; `None` is the identity.
pub fn ec_add(a: &BigRational, p: &Point, q: &Point) -> Point {
    let (Some((x1, y1)), Some((x2, y2))) = (p, q) else {
        return p.clone().or_else(|| q.clone());
    };
    let lambda = if x1 == x2 {
        if (y1 + y2).is_zero() {
            return None;
        }
        let three = BigRational::from_integer(BigInt::from(3));
        let two = BigRational::from_integer(BigInt::from(2));
        (three * x1 * x1 + a) / (two * y1)
    } else {
        (y2 - y1) / (x2 - x1)
    };
    let x3 = &lambda * &lambda - x1 - x2;
    let y3 = lambda * (x1 - &x3) - y1;
    Some((x3, y3))
}

/// True when `n P` is not the identity for every `1 <= n <= bound`.
pub fn no_small_torsion(a: i64, b: i64, x: i64, y: i64, bound: u32) -> bool {
    let q = |v: i64| BigRational::from_integer(BigInt::from(v));
    let (a, b) = (q(a), q(b));
    let base: Point = Some((q(x), q(y)));
    if let Some((x, y)) = &base {
        assert_eq!(y * y, x * x * x + &a * x + &b, "point not on curve");
    }
    let mut acc = base.clone();
    for _ in 1..=bound {
        if acc.is_none() {
            return false;
        }
        acc = ec_add(&a, &acc, &base);
    }
    true
}
