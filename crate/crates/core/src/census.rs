//! Point-count census of a family mod p: fiber-by-fiber totals against a
//! direct enumeration of the total space, and the contribution of the
//! singular fibers.
//!
//! All counts are taken on the plane model `y^2 = f(x, t)` with the same
//! points-at-infinity convention as the smooth fibers: one point when the
//! x-degree is odd, `#{y : y^2 = c_D(t)}` points when it is even.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::family::{FamilyModP, FiberCoeffs, HyperellipticFamily, MAX_DEGREE};
use crate::primes::{add_mod, mul_mod};
use crate::trace::{fibral_averages, lookup_sum, PrimeSummary, TraceOptions};

/// Above this prime the direct count walks columns in `t` instead of
/// enumerating `(t, x, y)` triples.
pub const TRIPLE_LOOP_MAX: u64 = 101;
pub const DEFAULT_CROSSCHECK_CUTOFF: u64 = 101;

/// `#{y in F_p : y^2 = v}` for every `v`, tabulated by squaring each `y`.
#[derive(Debug, Clone)]
pub struct SquareCounts {
    // zero-padded to a power of two for the difference-walk kernel
    counts: Vec<u8>,
}

impl SquareCounts {
    pub fn new(p: u32) -> Self {
        let mut counts = vec![0u8; (p as usize).next_power_of_two()];
        for y in 0..p {
            counts[mul_mod(y, y, p) as usize] += 1;
        }
        Self { counts }
    }

    #[inline]
    pub fn get(&self, v: u32) -> u64 {
        self.counts[v as usize] as u64
    }
}

fn points_at_infinity(fam: &FamilyModP, sq: &SquareCounts, lead: u32) -> u64 {
    if fam.degree_x() % 2 == 1 {
        1
    } else {
        sq.get(lead)
    }
}

/// Points of the plane model of the fiber over `t`, by enumeration.
pub fn plane_fiber_count(fam: &FamilyModP, sq: &SquareCounts, t: u32) -> u64 {
    let p = fam.p();
    let d = fam.degree_x();
    let f = fam.fiber_coeffs(t);
    let affine: u64 = (0..p)
        .map(|x| {
            let v = f[..=d].iter().rev().fold(0, |acc, &c| add_mod(mul_mod(acc, x, p), c, p));
            sq.get(v)
        })
        .sum();
    affine + points_at_infinity(fam, sq, f[d])
}

/// Total-space count by the literal `(t, x, y)` triple loop.
pub fn direct_count_triples(fam: &FamilyModP) -> u64 {
    let p = fam.p();
    let d = fam.degree_x();
    let coeffs = fam.t_coeffs();
    let mut total = 0u64;
    for t in 0..p {
        let ct: Vec<u32> = coeffs
            .iter()
            .map(|c| c.iter().rev().fold(0, |acc, &a| add_mod(mul_mod(acc, t, p), a, p)))
            .collect();
        for x in 0..p {
            let v = ct.iter().rev().fold(0, |acc, &c| add_mod(mul_mod(acc, x, p), c, p));
            total += (0..p).filter(|&y| mul_mod(y, y, p) == v).count() as u64;
        }
        total += if d % 2 == 1 {
            1
        } else {
            (0..p).filter(|&y| mul_mod(y, y, p) == ct[d]).count() as u64
        };
    }
    total + infinity_fiber_direct(fam)
}

fn infinity_fiber_direct(fam: &FamilyModP) -> u64 {
    fam.infinity_point()
        .map_or(0, |inf| plane_fiber_count(fam, &SquareCounts::new(fam.p()), inf))
}

/// Total-space count walking each column `x = const` along `t` with
/// forward differences in `t`.
pub fn direct_count_columns(fam: &FamilyModP, sq: &SquareCounts) -> u64 {
    let p = fam.p();
    let d = fam.degree_x();
    let coeffs = fam.t_coeffs();
    let deg_t = coeffs.iter().map(|c| c.len().saturating_sub(1)).max().unwrap_or(0);
    // g_x(t) = sum_k e_k(x) t^k with e_k(x) = sum_j c_{j,k} x^j
    let mut total = 0u64;
    let mut e = vec![0u32; deg_t + 1];
    for x in 0..p {
        e.fill(0);
        let mut xp = 1u32;
        for c in coeffs {
            for (k, &a) in c.iter().enumerate() {
                e[k] = add_mod(e[k], mul_mod(a, xp, p), p);
            }
            xp = mul_mod(xp, x, p);
        }
        total += if deg_t <= MAX_DEGREE {
            let mut column: FiberCoeffs = [0; MAX_DEGREE + 1];
            column[..=deg_t].copy_from_slice(&e);
            lookup_sum(&sq.counts, &column, deg_t, p) as u64
        } else {
            (0..p)
                .map(|t| sq.get(e.iter().rev().fold(0, |acc, &c| add_mod(mul_mod(acc, t, p), c, p))))
                .sum()
        };
    }
    let lead = &coeffs[d];
    total += (0..p)
        .map(|t| {
            let c = lead.iter().rev().fold(0, |acc, &a| add_mod(mul_mod(acc, t, p), a, p));
            points_at_infinity(fam, sq, c)
        })
        .sum::<u64>();
    total + infinity_fiber_direct(fam)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Crosscheck {
    Pass,
    Skipped,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CensusReport {
    pub p: u64,
    pub n_delta: u32,
    /// Sum of plane-model point counts over the singular fibers.
    pub singular_total: u64,
    /// `(singular_total - p n_delta) / p`
    pub inferred_trace: f64,
    pub rounded: i64,
    pub total_fiberwise: Option<u64>,
    pub total_direct: Option<u64>,
    pub crosscheck: Crosscheck,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CensusOptions {
    /// Cross-check only at primes up to this bound.
    pub crosscheck_cutoff: u64,
}

impl Default for CensusOptions {
    fn default() -> Self {
        Self {
            crosscheck_cutoff: DEFAULT_CROSSCHECK_CUTOFF,
        }
    }
}

fn singular_part(fam: &FamilyModP, sq: &SquareCounts) -> (u64, u32) {
    let singular: Vec<u32> = (0..fam.num_base_points()).filter(|&t| fam.is_singular(t)).collect();
    let total = singular.iter().map(|&t| plane_fiber_count(fam, sq, t)).sum();
    (total, singular.len() as u32)
}

fn inferred(p: u64, singular_total: u64, n_delta: u32) -> (f64, i64) {
    let v = (singular_total as f64 - (p * n_delta as u64) as f64) / p as f64;
    (v, v.round() as i64)
}

/// Singular-fiber census on the plane model (genus 1 only).
pub fn singular_census(fam: &FamilyModP) -> Result<CensusReport> {
    if fam.genus() != 1 {
        return Err(Error::UnsupportedGenus {
            expected: 1,
            found: fam.genus(),
        });
    }
    let sq = SquareCounts::new(fam.p());
    let (singular_total, n_delta) = singular_part(fam, &sq);
    let p = fam.p() as u64;
    let (inferred_trace, rounded) = inferred(p, singular_total, n_delta);
    Ok(CensusReport {
        p,
        n_delta,
        singular_total,
        inferred_trace,
        rounded,
        total_fiberwise: None,
        total_direct: None,
        crosscheck: Crosscheck::Skipped,
    })
}

/// Fiberwise total (good fibers from their traces, singular fibers by
/// enumeration) against the direct count. Any difference is a bug.
pub fn lefschetz_crosscheck(fam: &FamilyModP) -> Result<CensusReport> {
    let summary = fibral_averages(fam, &TraceOptions { b_max: 0 })?;
    crosscheck_with_summary(fam, &summary)
}

/// [`lefschetz_crosscheck`] reusing an already computed trace summary.
pub fn crosscheck_with_summary(fam: &FamilyModP, summary: &PrimeSummary) -> Result<CensusReport> {
    let p = fam.p() as u64;
    let sq = SquareCounts::new(fam.p());
    let (singular_total, n_delta) = singular_part(fam, &sq);
    // good fibers: #C = p + 1 - a
    let good_total = (summary.n_ns as i64 * (p as i64 + 1) - summary.a_num) as u64;
    let fiberwise = good_total + singular_total;
    let direct = if p <= TRIPLE_LOOP_MAX {
        direct_count_triples(fam)
    } else {
        direct_count_columns(fam, &sq)
    };
    if fiberwise != direct {
        return Err(Error::MismatchBug {
            p,
            fiberwise,
            direct,
        });
    }
    let (inferred_trace, rounded) = inferred(p, singular_total, n_delta);
    Ok(CensusReport {
        p,
        n_delta,
        singular_total,
        inferred_trace,
        rounded,
        total_fiberwise: Some(fiberwise),
        total_direct: Some(direct),
        crosscheck: Crosscheck::Pass,
    })
}

/// Census row for one prime given its trace summary: always the singular
/// part, plus the cross-check when `p` is within the cutoff (genus 1 only).
pub fn census_for_prime(
    fam: &FamilyModP,
    summary: &PrimeSummary,
    opts: &CensusOptions,
) -> Result<CensusReport> {
    if fam.genus() != 1 {
        return Err(Error::UnsupportedGenus {
            expected: 1,
            found: fam.genus(),
        });
    }
    if summary.p <= opts.crosscheck_cutoff {
        return crosscheck_with_summary(fam, summary);
    }
    singular_census(fam)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "verdict", content = "value")]
pub enum Stability {
    /// The rounded trace is constant on the upper half of the range.
    Stable(i64),
    Unstable,
    InsufficientRange,
}

/// Fewer primes than this gives [`Stability::InsufficientRange`].
pub const MIN_SWEEP_PRIMES: usize = 3;

pub fn stability_verdict(reports: &[CensusReport]) -> Stability {
    if reports.len() < MIN_SWEEP_PRIMES {
        return Stability::InsufficientRange;
    }
    let upper = &reports[reports.len() / 2..];
    let first = upper[0].rounded;
    if upper.iter().all(|r| r.rounded == first) {
        Stability::Stable(first)
    } else {
        Stability::Unstable
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CensusSweep {
    pub reports: Vec<CensusReport>,
    pub verdict: Stability,
}

/// Census over the good primes of `primes` (bad primes are skipped).
pub fn census_sweep(
    family: &HyperellipticFamily,
    primes: impl IntoIterator<Item = u64>,
    opts: &CensusOptions,
) -> Result<CensusSweep> {
    let mut reports = Vec::new();
    for p in primes {
        if family.is_bad_prime(p) {
            continue;
        }
        let fam = family.reduce_mod_p(p)?;
        let report = if p <= opts.crosscheck_cutoff {
            lefschetz_crosscheck(&fam)?
        } else {
            singular_census(&fam)?
        };
        reports.push(report);
    }
    let verdict = stability_verdict(&reports);
    Ok(CensusSweep { reports, verdict })
}
