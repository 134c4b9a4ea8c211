//! Prime enumeration and small-prime field arithmetic.
//!
//! Everything here is sized for moduli below 2^31 so that products of two
//! residues fit in a `u64` without overflow.

use crate::error::{Error, Result};

/// Largest modulus accepted by [`PrimeFieldCtx`] (exclusive).
pub const MAX_MODULUS: u64 = 1 << 31;

/// All primes `<= x_max` in ascending order.
pub fn sieve_primes(x_max: u64) -> Vec<u64> {
    if x_max < 2 {
        return Vec::new();
    }
    let n = x_max as usize;
    // composite[i] describes the odd number 2i + 1
    let half = n / 2 + 1;
    let mut composite = vec![false; half];
    let mut i = 1;
    while (2 * i + 1) * (2 * i + 1) <= n {
        if !composite[i] {
            let step = 2 * i + 1;
            let mut j = (step * step) / 2;
            while j < half {
                composite[j] = true;
                j += step;
            }
        }
        i += 1;
    }
    let mut out = Vec::with_capacity(estimate_pi(x_max));
    out.push(2);
    out.extend(
        (1..half)
            .filter(|&k| !composite[k] && 2 * k + 1 <= n)
            .map(|k| (2 * k + 1) as u64),
    );
    out
}

fn estimate_pi(x: u64) -> usize {
    let xf = x.max(3) as f64;
    (1.3 * xf / xf.ln()) as usize + 8
}

/// Deterministic trial division; only used for argument validation.
pub fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    if n % 2 == 0 {
        return n == 2;
    }
    let mut d = 3;
    while d * d <= n {
        if n % d == 0 {
            return false;
        }
        d += 2;
    }
    true
}

#[inline(always)]
pub(crate) fn add_mod(a: u32, b: u32, p: u32) -> u32 {
    let s = a + b;
    if s >= p {
        s - p
    } else {
        s
    }
}

#[inline(always)]
pub(crate) fn sub_mod(a: u32, b: u32, p: u32) -> u32 {
    if a >= b {
        a - b
    } else {
        a + p - b
    }
}

#[inline(always)]
pub(crate) fn mul_mod(a: u32, b: u32, p: u32) -> u32 {
    ((a as u64 * b as u64) % p as u64) as u32
}

pub(crate) fn pow_mod(mut base: u32, mut exp: u64, p: u32) -> u32 {
    let mut acc = 1 % p;
    while exp > 0 {
        if exp & 1 == 1 {
            acc = mul_mod(acc, base, p);
        }
        base = mul_mod(base, base, p);
        exp >>= 1;
    }
    acc
}

/// Inverse of a nonzero residue, by Fermat.
pub(crate) fn inv_mod(a: u32, p: u32) -> u32 {
    debug_assert!(a % p != 0);
    pow_mod(a, p as u64 - 2, p)
}

/// Reduce a signed integer into `[0, p)`.
pub fn reduce_i64(v: i64, p: u32) -> u32 {
    v.rem_euclid(p as i64) as u32
}

/// Tables for one odd prime: quadratic character, cubes, and the
/// non-residue used to build the quadratic extension.
#[derive(Debug, Clone)]
pub struct PrimeFieldCtx {
    p: u32,
    chi: Vec<i8>,
    cubes: Option<Vec<u32>>,
    nonresidue: u32,
}

impl PrimeFieldCtx {
    /// Builds the character table in O(p).
    pub fn new(p: u64) -> Result<Self> {
        if p == 2 || p >= MAX_MODULUS || !is_prime(p) {
            return Err(Error::BadPrime(p));
        }
        let p32 = p as u32;
        // padded with zeros to a power of two so masked lookups need no bounds check
        let mut chi = vec![0i8; (p as usize).next_power_of_two()];
        chi[1..p as usize].fill(-1);
        // v^2 for v = 1..(p-1)/2 via (v+1)^2 = v^2 + 2v + 1
        let mut sq = 0u32;
        for v in 0..(p32 - 1) / 2 {
            sq = add_mod(sq, add_mod(add_mod(v, v, p32), 1, p32), p32);
            chi[sq as usize] = 1;
        }
        let nonresidue = (2..p32)
            .find(|&d| chi[d as usize] == -1)
            .expect("every odd prime has a non-residue");
        Ok(Self {
            p: p32,
            chi,
            cubes: None,
            nonresidue,
        })
    }

    /// Same as [`PrimeFieldCtx::new`] plus the optional table of cubes.
    pub fn with_cubes(p: u64) -> Result<Self> {
        let mut ctx = Self::new(p)?;
        let p32 = ctx.p;
        ctx.cubes = Some(
            (0..p32)
                .map(|x| mul_mod(mul_mod(x, x, p32), x, p32))
                .collect(),
        );
        Ok(ctx)
    }

    #[inline]
    pub fn p(&self) -> u32 {
        self.p
    }

    #[inline]
    pub fn chi_table(&self) -> &[i8] {
        &self.chi[..self.p as usize]
    }

    /// The character table zero-padded to a power-of-two length.
    #[inline]
    pub(crate) fn chi_table_padded(&self) -> &[i8] {
        &self.chi
    }

    #[inline]
    pub fn chi(&self, u: u32) -> i8 {
        self.chi[u as usize]
    }

    pub fn cube_table(&self) -> Option<&[u32]> {
        self.cubes.as_deref()
    }

    /// Least quadratic non-residue; `F_{p^2} = F_p[sqrt(d)]`.
    pub fn nonresidue(&self) -> u32 {
        self.nonresidue
    }

    pub fn fp2(&self, re: u32, im: u32) -> Fp2Elem {
        Fp2Elem {
            re: re % self.p,
            im: im % self.p,
        }
    }

    pub fn fp2_add(&self, x: Fp2Elem, y: Fp2Elem) -> Fp2Elem {
        Fp2Elem {
            re: add_mod(x.re, y.re, self.p),
            im: add_mod(x.im, y.im, self.p),
        }
    }

    pub fn fp2_sub(&self, x: Fp2Elem, y: Fp2Elem) -> Fp2Elem {
        Fp2Elem {
            re: sub_mod(x.re, y.re, self.p),
            im: sub_mod(x.im, y.im, self.p),
        }
    }

    pub fn fp2_mul(&self, x: Fp2Elem, y: Fp2Elem) -> Fp2Elem {
        let p = self.p as u64;
        let (a, b, c, e) = (x.re as u64, x.im as u64, y.re as u64, y.im as u64);
        let bd = (b * e) % p;
        let re = (a * c + bd * self.nonresidue as u64) % p;
        let im = (a * e + b * c) % p;
        Fp2Elem {
            re: re as u32,
            im: im as u32,
        }
    }

    pub fn fp2_pow(&self, mut base: Fp2Elem, mut exp: u64) -> Fp2Elem {
        let mut acc = Fp2Elem::ONE;
        while exp > 0 {
            if exp & 1 == 1 {
                acc = self.fp2_mul(acc, base);
            }
            base = self.fp2_mul(base, base);
            exp >>= 1;
        }
        acc
    }

    /// `(a + b sqrt d)^p = a - b sqrt d`.
    pub fn fp2_frobenius(&self, x: Fp2Elem) -> Fp2Elem {
        Fp2Elem {
            re: x.re,
            im: sub_mod(0, x.im, self.p),
        }
    }

    /// `N(a + b sqrt d) = a^2 - d b^2`, an element of `F_p`.
    pub fn fp2_norm(&self, x: Fp2Elem) -> u32 {
        let p = self.p;
        sub_mod(
            mul_mod(x.re, x.re, p),
            mul_mod(self.nonresidue, mul_mod(x.im, x.im, p), p),
            p,
        )
    }

    /// Number of `y` in `F_{p^2}` with `y^2 = u`.
    pub fn fp2_count_sqrt_classes(&self, u: Fp2Elem) -> u32 {
        if u.is_zero() {
            return 1;
        }
        // the quadratic character of F_{p^2} is chi_p composed with the norm
        if self.chi(self.fp2_norm(u)) == 1 {
            2
        } else {
            0
        }
    }
}

/// `re + im * sqrt(d)` in `F_p[sqrt d]`, residues kept reduced.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct Fp2Elem {
    pub re: u32,
    pub im: u32,
}

impl Fp2Elem {
    pub const ZERO: Fp2Elem = Fp2Elem { re: 0, im: 0 };
    pub const ONE: Fp2Elem = Fp2Elem { re: 1, im: 0 };

    pub fn from_fp(re: u32) -> Self {
        Fp2Elem { re, im: 0 }
    }

    pub fn is_zero(&self) -> bool {
        self.re == 0 && self.im == 0
    }
}
