//! Per-fiber Frobenius traces and their fibral averages at one prime.
//!
//! The inner loops walk `x` with a forward-difference table, so each step
//! is `D` modular additions (compare-and-subtract, no division) plus one
//! character-table lookup.

use std::time::{Duration, Instant};

use num_rational::Ratio;

use crate::error::{Error, Result};
use crate::family::{FamilyModP, FiberCoeffs, MAX_DEGREE};
use crate::primes::{add_mod, mul_mod, sub_mod, PrimeFieldCtx};

/// Default cutoff for the genus-2 `F_{p^2}` pass.
pub const DEFAULT_B_MAX: u64 = 500;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TraceOptions {
    /// The genus-2 `B` pass runs only for `p <= b_max`.
    pub b_max: u64,
}

impl Default for TraceOptions {
    fn default() -> Self {
        Self { b_max: DEFAULT_B_MAX }
    }
}

/// Traces of Frobenius on `H^1` and `H^2` of one fiber.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FiberTrace {
    pub t: u32,
    pub a: i64,
    /// `None` when the genus-2 `B` pass was skipped for this prime.
    pub b: Option<i64>,
    pub singular: bool,
}

/// Exact per-prime aggregates; the averages are `a_num / p` and `b_num / p`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PrimeSummary {
    pub p: u64,
    pub a_num: i64,
    pub b_num: Option<i64>,
    pub n_delta: u32,
    pub n_ns: u32,
    pub elapsed: Duration,
    pub max_abs_a: i64,
    pub max_abs_b: Option<i64>,
    /// Good fibers with `|a| > floor(2 g sqrt p)`. Always zero unless counting is broken.
    pub hasse_weil_violations: u32,
    /// Good fibers with `|b| > 6p` (genus 2 only).
    pub weil_b_violations: u32,
}

impl PrimeSummary {
    pub fn average_a(&self) -> Ratio<i64> {
        Ratio::new(self.a_num, self.p as i64)
    }

    pub fn average_b(&self) -> Option<Ratio<i64>> {
        self.b_num.map(|b| Ratio::new(b, self.p as i64))
    }

    pub fn b_computed(&self) -> bool {
        self.b_num.is_some()
    }
}

/// `floor(2 g sqrt p)`.
pub fn hasse_weil_bound(genus: u32, p: u64) -> i64 {
    let g = genus as u64;
    (4 * g * g * p).isqrt() as i64
}

/// Forward differences `Delta^i f(x0)` for `i = 0..=D`.
#[inline]
fn difference_table<const D: usize>(f: &FiberCoeffs, x0: u32, p: u32) -> [u32; MAX_DEGREE + 1] {
    let mut v = [0u32; MAX_DEGREE + 1];
    for (k, slot) in v.iter_mut().enumerate().take(D + 1) {
        let x = ((x0 as u64 + k as u64) % p as u64) as u32;
        *slot = horner(f, D, x, p);
    }
    for level in 1..=D {
        for k in (level..=D).rev() {
            v[k] = sub_mod(v[k], v[k - 1], p);
        }
    }
    v
}

#[inline]
fn horner(f: &FiberCoeffs, degree: usize, x: u32, p: u32) -> u32 {
    f[..=degree]
        .iter()
        .rev()
        .fold(0, |acc, &c| add_mod(mul_mod(acc, x, p), c, p))
}

const LANES: usize = 8;
const BLOCK: usize = 64;

/// `a + b mod p` without a branch, for `p < 2^31`: `a + b - p` lies in
/// `[-p, p)` and its sign bit selects whether to add `p` back.
#[inline(always)]
fn add_mod_min(a: u32, b: u32, p: u32) -> u32 {
    let s = a.wrapping_add(b).wrapping_sub(p);
    let mask = ((s as i32) >> 31) as u32;
    s.wrapping_add(p & mask)
}

/// `sum_{x in F_p} table[f(x)]` over interleaved segments of `x`, stepping
/// each segment by forward differences. `table` is zero-padded to a power
/// of two.
fn lookup_sum_fd<const D: usize, T: Copy + Into<i32>>(table: &[T], f: &FiberCoeffs, p: u32) -> i64 {
    let n = p as usize;
    let at = |x: u32| table[horner(f, D, x, p) as usize].into() as i64;
    if n < 8 * LANES {
        return (0..p).map(at).sum();
    }
    let seg = n.div_ceil(LANES);
    debug_assert!(table.len().is_power_of_two() && table.len() >= n);
    let mask = table.len() - 1;
    let table = &table[..=mask];
    let mut state = [[0u32; LANES]; MAX_DEGREE + 1];
    for lane in 0..LANES {
        // n >= 8 * LANES keeps every lane start below p
        let diffs = difference_table::<D>(f, (lane * seg) as u32, p);
        for level in 0..=D {
            state[level][lane] = diffs[level];
        }
    }
    // A block of m steps is built one difference level at a time, top down:
    // level i at step k + 1 is level i at step k plus level i + 1 at step k.
    // Each pass runs in place over the block, vectorized across lanes.
    let mut buf = [[0u32; LANES]; BLOCK];
    let mut acc = [0i32; 4];
    let mut remaining = seg;
    while remaining > 0 {
        let m = remaining.min(BLOCK);
        let block = &mut buf[..m];
        block.fill(state[D]);
        for level in (0..D).rev() {
            let mut cur = state[level];
            for row in block.iter_mut() {
                let below = *row;
                *row = cur;
                for (c, b) in cur.iter_mut().zip(below) {
                    *c = add_mod_min(*c, b, p);
                }
            }
            state[level] = cur;
        }
        for quad in buf[..m].as_flattened().chunks_exact(4) {
            for (a, &v) in acc.iter_mut().zip(quad) {
                *a += table[v as usize & mask].into();
            }
        }
        remaining -= m;
    }
    let total: i64 = acc.iter().map(|&a| a as i64).sum();
    // the last lane runs past p - 1 and revisits x = 0, 1, ..
    let overshoot: i64 = (0..(LANES * seg - n) as u32).map(at).sum();
    total - overshoot
}

/// `sum_{x in F_p} table[f(x)]` for a polynomial of degree at most 6, with
/// `table` zero-padded to a power-of-two length.
pub(crate) fn lookup_sum<T: Copy + Into<i32>>(table: &[T], f: &FiberCoeffs, degree: usize, p: u32) -> i64 {
    match degree {
        0 => p as i64 * table[f[0] as usize].into() as i64,
        1 => lookup_sum_fd::<1, T>(table, f, p),
        2 => lookup_sum_fd::<2, T>(table, f, p),
        3 => lookup_sum_fd::<3, T>(table, f, p),
        4 => lookup_sum_fd::<4, T>(table, f, p),
        5 => lookup_sum_fd::<5, T>(table, f, p),
        _ => lookup_sum_fd::<6, T>(table, f, p),
    }
}

/// `sum_{x in F_p} chi(f(x))` for a polynomial of the given degree.
pub fn character_sum(ctx: &PrimeFieldCtx, f: &FiberCoeffs, degree: usize) -> i64 {
    lookup_sum(ctx.chi_table_padded(), f, degree, ctx.p())
}

/// Trace on `H^1` of a good fiber: `a = p + 1 - #C(F_p)`.
fn good_fiber_a(ctx: &PrimeFieldCtx, f: &FiberCoeffs, degree: usize) -> i64 {
    let s = character_sum(ctx, f, degree);
    if degree % 2 == 1 {
        -s
    } else {
        -(ctx.chi(f[degree]) as i64) - s
    }
}

fn singular_fiber_error(fam: &FamilyModP, t: u32) -> Error {
    Error::SingularFiber {
        p: fam.p() as u64,
        t: t as u64,
    }
}

/// `#C_t(F_p)` on the smooth model: affine points plus the points at infinity.
pub fn curve_count_fp(fam: &FamilyModP, t: u32) -> Result<u64> {
    if fam.is_singular(t) {
        return Err(singular_fiber_error(fam, t));
    }
    let a = good_fiber_a(fam.ctx(), &fam.fiber_coeffs(t), fam.degree_x());
    Ok((fam.p() as i64 + 1 - a) as u64)
}

/// `sum_{x in F_{p^2}} chi_{p^2}(f(x))`, using conjugation symmetry:
/// rows `x = a + b sqrt d` with `b` and `-b` contribute equally.
pub fn character_sum_fp2(ctx: &PrimeFieldCtx, f: &FiberCoeffs, degree: usize) -> i64 {
    let p = ctx.p();
    let d = ctx.nonresidue();
    let chi = ctx.chi_table();
    let sq: Vec<u32> = (0..p).map(|u| mul_mod(u, u, p)).collect();
    let dsq: Vec<u32> = sq.iter().map(|&s| mul_mod(s, d, p)).collect();
    let coeffs: Vec<_> = f[..=degree].iter().map(|&c| ctx.fp2(c, 0)).collect();
    let eval = |x| {
        coeffs
            .iter()
            .rev()
            .fold(crate::primes::Fp2Elem::ZERO, |acc, &c| ctx.fp2_add(ctx.fp2_mul(acc, x), c))
    };
    let mut total = 0i64;
    for b in 0..=(p - 1) / 2 {
        // difference table along a for x = a + b sqrt d
        let mut re = [0u32; MAX_DEGREE + 1];
        let mut im = [0u32; MAX_DEGREE + 1];
        for k in 0..=degree {
            let v = eval(ctx.fp2(k as u32 % p, b));
            re[k] = v.re;
            im[k] = v.im;
        }
        for level in 1..=degree {
            for k in (level..=degree).rev() {
                re[k] = sub_mod(re[k], re[k - 1], p);
                im[k] = sub_mod(im[k], im[k - 1], p);
            }
        }
        let mut row = 0i64;
        for _ in 0..p {
            let norm = sub_mod(sq[re[0] as usize], dsq[im[0] as usize], p);
            row += chi[norm as usize] as i64;
            for i in 0..degree {
                re[i] = add_mod(re[i], re[i + 1], p);
                im[i] = add_mod(im[i], im[i + 1], p);
            }
        }
        total += if b == 0 { row } else { 2 * row };
    }
    total
}

/// `#C_t(F_{p^2})` on the smooth model.
pub fn curve_count_fp2(fam: &FamilyModP, t: u32) -> Result<u64> {
    if fam.is_singular(t) {
        return Err(singular_fiber_error(fam, t));
    }
    let p = fam.p() as i64;
    let deg = fam.degree_x();
    let s = character_sum_fp2(fam.ctx(), &fam.fiber_coeffs(t), deg);
    // the leading coefficient lies in F_p^*, hence is a square in F_{p^2}
    let at_infinity = if deg % 2 == 1 { 1 } else { 2 };
    Ok((p * p + s + at_infinity) as u64)
}

/// Trace on `H^2 = wedge^2 H^1` of an abelian surface, `e_2 = (t1^2 - t2) / 2`.
pub fn b_from_h1(t1: i64, t2: i64, p: u64) -> Result<i64> {
    let twice = t1 * t1 - t2;
    if twice % 2 != 0 {
        return Err(Error::ParityViolation { t1, t2 });
    }
    let b = twice / 2;
    debug_assert!(b.abs() <= 6 * p as i64, "|b| = {} exceeds 6p at p = {p}", b.abs());
    Ok(b)
}

fn good_fiber_b(fam: &FamilyModP, t: u32, a: i64) -> Result<i64> {
    let p = fam.p() as i64;
    let t2 = p * p + 1 - curve_count_fp2(fam, t)? as i64;
    b_from_h1(a, t2, p as u64)
}

fn b_pass_enabled(fam: &FamilyModP, opts: &TraceOptions) -> bool {
    fam.genus() == 1 || fam.p() as u64 <= opts.b_max
}

/// Traces at base point `t`; singular fibers contribute zero.
pub fn fiber_trace(fam: &FamilyModP, t: u32, opts: &TraceOptions) -> Result<FiberTrace> {
    let with_b = b_pass_enabled(fam, opts);
    if fam.is_singular(t) {
        return Ok(FiberTrace {
            t,
            a: 0,
            b: with_b.then_some(0),
            singular: true,
        });
    }
    let a = good_fiber_a(fam.ctx(), &fam.fiber_coeffs(t), fam.degree_x());
    let b = match (fam.genus(), with_b) {
        (1, _) => Some(fam.p() as i64),
        (_, true) => Some(good_fiber_b(fam, t, a)?),
        (_, false) => None,
    };
    Ok(FiberTrace {
        t,
        a,
        b,
        singular: false,
    })
}

/// Sums the traces over all base points of `fam`, as exact integers.
pub fn fibral_averages(fam: &FamilyModP, opts: &TraceOptions) -> Result<PrimeSummary> {
    let start = Instant::now();
    let p = fam.p() as u64;
    let bound = hasse_weil_bound(fam.genus(), p);
    let b_bound = 6 * p as i64;
    let with_b = b_pass_enabled(fam, opts);
    let mut a_num = 0i64;
    let mut b_num = 0i64;
    let mut max_abs_a = 0i64;
    let mut max_abs_b = 0i64;
    let mut hasse_weil_violations = 0;
    let mut weil_b_violations = 0;
    for t in 0..fam.num_base_points() {
        let tr = fiber_trace(fam, t, opts)?;
        if tr.singular {
            continue;
        }
        a_num += tr.a;
        max_abs_a = max_abs_a.max(tr.a.abs());
        if tr.a.abs() > bound {
            hasse_weil_violations += 1;
        }
        if let Some(b) = tr.b {
            b_num += b;
            max_abs_b = max_abs_b.max(b.abs());
            if fam.genus() == 2 && b.abs() > b_bound {
                weil_b_violations += 1;
            }
        }
    }
    Ok(PrimeSummary {
        p,
        a_num,
        b_num: with_b.then_some(b_num),
        n_delta: fam.n_delta(),
        n_ns: fam.n_ns(),
        elapsed: start.elapsed(),
        max_abs_a,
        max_abs_b: with_b.then_some(max_abs_b),
        hasse_weil_violations,
        weil_b_violations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::family::{corpus_family, HyperellipticFamily};

    fn constant_family(coeffs: &[i64]) -> HyperellipticFamily {
        HyperellipticFamily::new(
            "const".into(),
            coeffs.iter().map(|&c| vec![c]).collect(),
            true,
            1,
            None,
        )
        .unwrap()
    }

    #[test]
    fn constant_cubic_at_5() {
        let fam = constant_family(&[1, 1, 0, 1]).reduce_mod_p(5).unwrap();
        assert_eq!(curve_count_fp(&fam, 0).unwrap(), 9);
        let tr = fiber_trace(&fam, 3, &TraceOptions::default()).unwrap();
        assert_eq!((tr.a, tr.b, tr.singular), (-3, Some(5), false));
        let s = fibral_averages(&fam, &TraceOptions::default()).unwrap();
        assert_eq!(s.average_a(), Ratio::from_integer(-3));
        assert_eq!(s.average_b(), Some(Ratio::from_integer(5)));
    }

    #[test]
    fn quintic_at_3() {
        // p = 3 is excluded from runs but the fiber arithmetic is valid there;
        // counts from brute force over F_3 and F_9
        for (coeffs, n1, n2, a, b) in [
            ([0i64, 1, 0, 0, 0, 1], 4u64, 14u64, 0i64, 2i64),
            ([1, 2, 0, 0, 0, 1], 7, 15, -3, 7),
        ] {
            let fam = constant_family(&coeffs).reduce_mod_p_unchecked(3).unwrap();
            assert_eq!(curve_count_fp(&fam, 0).unwrap(), n1);
            assert_eq!(curve_count_fp2(&fam, 0).unwrap(), n2);
            let tr = fiber_trace(&fam, 0, &TraceOptions::default()).unwrap();
            assert_eq!((tr.a, tr.b), (a, Some(b)));
        }
    }

    #[test]
    fn b_from_h1_examples() {
        assert_eq!(b_from_h1(0, 0, 5).unwrap(), 0);
        assert_eq!(b_from_h1(0, -4, 3).unwrap(), 2);
        assert!(matches!(b_from_h1(1, 0, 5), Err(Error::ParityViolation { .. })));
    }

    #[test]
    fn singular_fibers_are_zero() {
        let fam = corpus_family("legendre").unwrap().reduce_mod_p(5).unwrap();
        let tr = fiber_trace(&fam, 0, &TraceOptions::default()).unwrap();
        assert_eq!((tr.a, tr.b, tr.singular), (0, Some(0), true));
        assert!(matches!(curve_count_fp(&fam, 1), Err(Error::SingularFiber { p: 5, t: 1 })));
    }

    #[test]
    fn g1_b_average_is_good_fiber_count() {
        for name in ["legendre", "f1"] {
            let fam = corpus_family(name).unwrap();
            for p in [5u64, 7, 11, 101, 1009] {
                let fp = fam.reduce_mod_p(p).unwrap();
                let s = fibral_averages(&fp, &TraceOptions::default()).unwrap();
                assert_eq!(s.b_num, Some(p as i64 * (p as i64 - s.n_delta as i64)));
                assert_eq!(s.n_ns + s.n_delta, p as u32);
            }
        }
    }

    #[test]
    fn g2_b_pass_cutoff() {
        let fam = corpus_family("g2s").unwrap();
        let opts = TraceOptions { b_max: 20 };
        let small = fibral_averages(&fam.reduce_mod_p(19).unwrap(), &opts).unwrap();
        assert!(small.b_computed());
        let large = fibral_averages(&fam.reduce_mod_p(23).unwrap(), &opts).unwrap();
        assert!(!large.b_computed());
        assert_eq!(large.max_abs_b, None);
        let tr = fiber_trace(&fam.reduce_mod_p(23).unwrap(), 2, &opts).unwrap();
        assert_eq!(tr.b, None);
    }

    #[test]
    fn segmented_sum_matches_horner_sum() {
        for p in [37u64, 67, 101, 1009, 4099] {
            let ctx = PrimeFieldCtx::new(p).unwrap();
            let p32 = p as u32;
            for degree in 0..=6 {
                let mut f = [0u32; MAX_DEGREE + 1];
                for (j, c) in f.iter_mut().enumerate().take(degree + 1) {
                    *c = ((j as u64 * 7919 + 13 * degree as u64) % p) as u32;
                }
                f[degree] = f[degree].max(1);
                let direct: i64 = (0..p32).map(|x| ctx.chi(horner(&f, degree, x, p32)) as i64).sum();
                assert_eq!(character_sum(&ctx, &f, degree), direct, "p={p} degree={degree}");
            }
        }
    }

    proptest::proptest! {
        #[test]
        fn square_root_table_sums_match(idx in 18usize..400, coeffs in proptest::array::uniform7(0u32..u32::MAX), degree in 0usize..=6) {
            let p = crate::primes::sieve_primes(2800)[idx] as u32;
            let mut f = [0u32; MAX_DEGREE + 1];
            for j in 0..=degree {
                f[j] = coeffs[j] % p;
            }
            let mut roots = vec![0u8; (p as usize).next_power_of_two()];
            for y in 0..p {
                roots[mul_mod(y, y, p) as usize] += 1;
            }
            let direct: i64 = (0..p).map(|x| roots[horner(&f, degree, x, p) as usize] as i64).sum();
            proptest::prop_assert_eq!(lookup_sum(&roots, &f, degree, p), direct);
        }
    }

    #[test]
    fn hasse_weil_bound_values() {
        assert_eq!(hasse_weil_bound(1, 5), 4);
        assert_eq!(hasse_weil_bound(1, 7), 5);
        assert_eq!(hasse_weil_bound(2, 7), 10);
        assert_eq!(hasse_weil_bound(2, 9973), 399);
    }
}
