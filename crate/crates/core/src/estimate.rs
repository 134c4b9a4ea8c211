//! Cesàro and Dirichlet-series estimates of the rank from per-prime
//! trace averages, and the Shioda–Tate rank ledger.

use num_traits::{Float, FromPrimitive};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::family::HyperellipticFamily;
use crate::trace::PrimeSummary;

/// Neumaier-compensated running sum.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CompensatedSum<F> {
    sum: F,
    carry: F,
}

impl<F: Float> Default for CompensatedSum<F> {
    fn default() -> Self {
        Self {
            sum: F::zero(),
            carry: F::zero(),
        }
    }
}

impl<F: Float> CompensatedSum<F> {
    pub fn add(&mut self, x: F) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.carry = self.carry + ((self.sum - t) + x);
        } else {
            self.carry = self.carry + ((x - t) + self.sum);
        }
        self.sum = t;
    }

    pub fn value(&self) -> F {
        self.sum + self.carry
    }
}

impl<F: Float> FromIterator<F> for CompensatedSum<F> {
    fn from_iter<I: IntoIterator<Item = F>>(iter: I) -> Self {
        let mut s = Self::default();
        for x in iter {
            s.add(x);
        }
        s
    }
}

/// The integer data the estimators need from one prime.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PrimeRecord {
    pub p: u64,
    pub n_delta: u32,
    pub a_num: i64,
    pub b_num: Option<i64>,
}

impl From<&PrimeSummary> for PrimeRecord {
    fn from(s: &PrimeSummary) -> Self {
        Self {
            p: s.p,
            n_delta: s.n_delta,
            a_num: s.a_num,
            b_num: s.b_num,
        }
    }
}

fn cast<F: FromPrimitive>(v: f64) -> F {
    F::from_f64(v).expect("representable")
}

fn from_u64<F: FromPrimitive>(v: u64) -> F {
    F::from_u64(v).expect("representable")
}

fn from_i64<F: FromPrimitive>(v: i64) -> F {
    F::from_i64(v).expect("representable")
}

/// Partial sums evaluated at one `X`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CesaroPoint<F> {
    pub x: F,
    /// `(1/X) sum -A_p log p`
    pub s: F,
    /// `(1/X_B) sum B_p log p / p`, `X_B = min(X, B cutoff)`
    pub t: F,
    /// `(1/X) sum log p`
    pub theta: F,
}

impl<F: Float> CesaroPoint<F> {
    pub fn combined(&self) -> F {
        self.s + self.t
    }
}

/// Running Cesàro sums over an ascending stream of primes.
#[derive(Debug, Clone)]
pub struct EstimateSeries<F> {
    records: Vec<PrimeRecord>,
    a_sum: CompensatedSum<F>,
    b_sum: CompensatedSum<F>,
    theta_sum: CompensatedSum<F>,
    delta_sum: CompensatedSum<F>,
    /// First prime whose `B` was not computed; `T` is normalized below it.
    b_cutoff: Option<u64>,
    checkpoints: Vec<CesaroPoint<F>>,
}

impl<F: Float + FromPrimitive> Default for EstimateSeries<F> {
    fn default() -> Self {
        Self::new()
    }
}

impl<F: Float + FromPrimitive> EstimateSeries<F> {
    pub fn new() -> Self {
        Self {
            records: Vec::new(),
            a_sum: CompensatedSum::default(),
            b_sum: CompensatedSum::default(),
            theta_sum: CompensatedSum::default(),
            delta_sum: CompensatedSum::default(),
            b_cutoff: None,
            checkpoints: Vec::new(),
        }
    }

    /// Rebuilds a series from stored records, in order.
    pub fn from_records<'a>(records: impl IntoIterator<Item = &'a PrimeRecord>) -> Result<Self> {
        let mut series = Self::new();
        for r in records {
            series.push_record(*r)?;
        }
        Ok(series)
    }

    pub fn cesaro_update(&mut self, summary: &PrimeSummary) -> Result<()> {
        self.push_record(summary.into())
    }

    pub fn push_record(&mut self, r: PrimeRecord) -> Result<()> {
        if let Some(last) = self.records.last() {
            if r.p <= last.p {
                return Err(Error::OutOfOrderPrime { prev: last.p, got: r.p });
            }
        }
        let p: F = from_u64(r.p);
        let log_p = p.ln();
        self.a_sum.add(-from_i64::<F>(r.a_num) / p * log_p);
        self.theta_sum.add(log_p);
        self.delta_sum.add(from_u64::<F>(r.n_delta as u64) * log_p / p);
        match r.b_num {
            Some(b) if self.b_cutoff.is_none() => self.b_sum.add(from_i64::<F>(b) / p * log_p / p),
            Some(_) => {}
            None => {
                self.b_cutoff.get_or_insert(r.p);
            }
        }
        self.records.push(r);
        Ok(())
    }

    pub fn records(&self) -> &[PrimeRecord] {
        &self.records
    }

    pub fn last_prime(&self) -> Option<u64> {
        self.records.last().map(|r| r.p)
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn b_cutoff(&self) -> Option<u64> {
        self.b_cutoff
    }

    /// Sums evaluated at `X` (normally the range end, not the last prime).
    pub fn at(&self, x: F) -> CesaroPoint<F> {
        let x_b = match self.b_cutoff {
            Some(c) => x.min(from_u64(c)),
            None => x,
        };
        CesaroPoint {
            x,
            s: self.a_sum.value() / x,
            t: self.b_sum.value() / x_b,
            theta: self.theta_sum.value() / x,
        }
    }

    /// `(1/X) sum n_delta(p) log p / p`; for genus 1, `T = theta - this`.
    pub fn delta_correction(&self, x: F) -> F {
        self.delta_sum.value() / x
    }

    pub fn checkpoint(&mut self, x: F) -> CesaroPoint<F> {
        let pt = self.at(x);
        self.checkpoints.push(pt);
        pt
    }

    pub fn checkpoints(&self) -> &[CesaroPoint<F>] {
        &self.checkpoints
    }

    /// Median of `S` over the last `window` checkpoints. Never alters the raw series.
    pub fn smoothed_s(&self, window: usize) -> Option<F> {
        if self.checkpoints.is_empty() || window == 0 {
            return None;
        }
        let start = self.checkpoints.len().saturating_sub(window);
        let mut v: Vec<F> = self.checkpoints[start..].iter().map(|c| c.s).collect();
        v.sort_by(|a, b| a.partial_cmp(b).expect("finite sums"));
        let n = v.len();
        Some(if n % 2 == 1 {
            v[n / 2]
        } else {
            (v[n / 2 - 1] + v[n / 2]) / cast(2.0)
        })
    }
}

pub const DEFAULT_GRID_A: [f64; 5] = [1.5, 1.3, 1.2, 1.1, 1.05];
pub const DEFAULT_GRID_B: [f64; 5] = [2.5, 2.3, 2.2, 2.1, 2.05];
pub const MIN_RESIDUE_PRIMES: usize = 100;

/// One evaluation of the truncated residue surrogate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridValue<F> {
    pub s: F,
    /// `(s - s0) sum c_p log p / p^s` over the available primes.
    pub raw: F,
    /// The same with `c_p` set to its unit-residue reference (`1` resp. `p`).
    pub reference: F,
    /// `raw / reference`; the quantity that is extrapolated.
    pub normalized: F,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResidueEstimate<F> {
    pub res_a: F,
    /// `None` when no prime carries a `B` value.
    pub res_b: Option<F>,
    pub grid_a: Vec<GridValue<F>>,
    pub grid_b: Vec<GridValue<F>>,
}

/// Least-squares line through `(u, v)`, evaluated at `u = 0`.
fn intercept<F: Float + FromPrimitive>(points: &[(F, F)]) -> F {
    let n: F = from_u64(points.len() as u64);
    if points.len() == 1 {
        return points[0].1;
    }
    let mu = points.iter().fold(F::zero(), |a, &(u, _)| a + u) / n;
    let mv = points.iter().fold(F::zero(), |a, &(_, v)| a + v) / n;
    let (mut suu, mut suv) = (F::zero(), F::zero());
    for &(u, v) in points {
        suu = suu + (u - mu) * (u - mu);
        suv = suv + (u - mu) * (v - mv);
    }
    if suu == F::zero() {
        return mv;
    }
    mv - suv / suu * mu
}

fn residue_grid<F: Float + FromPrimitive>(
    terms: &[(u64, F, F)],
    grid: &[F],
    pole: F,
) -> Vec<GridValue<F>> {
    grid.iter()
        .map(|&s| {
            let (mut raw, mut reference) = (CompensatedSum::default(), CompensatedSum::default());
            for &(p, coeff, unit) in terms {
                let pf: F = from_u64(p);
                let w = pf.ln() / pf.powf(s);
                raw.add(coeff * w);
                reference.add(unit * w);
            }
            let raw = (s - pole) * raw.value();
            let reference = (s - pole) * reference.value();
            GridValue {
                s,
                raw,
                reference,
                normalized: raw / reference,
            }
        })
        .collect()
}

/// Residue surrogates at `s = 1` (A-term) and `s = 2` (B-term).
///
/// Each grid value is divided by the same truncated sum taken with the
/// coefficient of a simple unit-residue pole, which removes the truncation
/// bias of a finite prime range; the normalized values are then extrapolated
/// linearly in `s - s0` to zero.
pub fn dirichlet_residue<F: Float + FromPrimitive>(
    records: &[PrimeRecord],
    grid_a: &[F],
    grid_b: &[F],
) -> Result<ResidueEstimate<F>> {
    if records.len() < MIN_RESIDUE_PRIMES {
        return Err(Error::InsufficientData {
            needed: MIN_RESIDUE_PRIMES,
            have: records.len(),
        });
    }
    let a_terms: Vec<(u64, F, F)> = records
        .iter()
        .map(|r| (r.p, -from_i64::<F>(r.a_num) / from_u64(r.p), F::one()))
        .collect();
    let b_terms: Vec<(u64, F, F)> = records
        .iter()
        .map_while(|r| r.b_num.map(|b| (r.p, from_i64::<F>(b) / from_u64(r.p), from_u64(r.p))))
        .collect();
    let one = F::one();
    let two: F = cast(2.0);
    let grid_a = residue_grid(&a_terms, grid_a, one);
    let grid_b = if b_terms.is_empty() {
        Vec::new()
    } else {
        residue_grid(&b_terms, grid_b, two)
    };
    let pts = |g: &[GridValue<F>], pole: F| -> Vec<(F, F)> {
        g.iter().map(|v| (v.s - pole, v.normalized)).collect()
    };
    Ok(ResidueEstimate {
        res_a: intercept(&pts(&grid_a, one)),
        res_b: (!grid_b.is_empty()).then(|| intercept(&pts(&grid_b, two))),
        grid_a,
        grid_b,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum EstimateMode {
    /// `S(X)` alone estimates the Mordell–Weil rank (elliptic fibrations).
    #[default]
    Elliptic,
    /// `S(X) + T(X) - rank NS(A/K)`.
    Combined,
}

impl std::str::FromStr for EstimateMode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "elliptic" => Ok(Self::Elliptic),
            "combined" => Ok(Self::Combined),
            other => Err(Error::InvalidConfig(format!("unknown mode `{other}`"))),
        }
    }
}

impl std::fmt::Display for EstimateMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::Elliptic => "elliptic",
            Self::Combined => "combined",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RankEstimate<F> {
    pub raw: F,
    pub rounded: i64,
    /// `|raw - rounded|`
    pub gap: F,
    pub mode: EstimateMode,
}

/// Nearest integer, ties to even.
pub fn round_ties_even<F: Float + FromPrimitive>(v: F) -> F {
    let r = v.round();
    let two: F = cast(2.0);
    if (v - v.trunc()).abs() == cast(0.5) && r % two != F::zero() {
        r - v.signum()
    } else {
        r
    }
}

pub fn rank_estimate<F: Float + FromPrimitive>(
    point: &CesaroPoint<F>,
    family: &HyperellipticFamily,
    mode: EstimateMode,
) -> Result<RankEstimate<F>> {
    if !family.trace_trivial_asserted {
        return Err(Error::HypothesisNotAsserted(family.name.clone()));
    }
    let raw = match mode {
        EstimateMode::Elliptic => point.s,
        EstimateMode::Combined => point.s + point.t - from_u64(family.ns_ak_rank_asserted as u64),
    };
    let rounded = round_ties_even(raw);
    Ok(RankEstimate {
        raw,
        rounded: rounded.to_i64().expect("finite estimate"),
        gap: (raw - rounded).abs(),
        mode,
    })
}

/// Shioda–Tate bookkeeping: `ns_a = mw + ns_s + ns_ak + f_inv`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RankLedger {
    pub mw_rank: i64,
    pub ns_a_rank: i64,
    pub ns_s_rank: i64,
    pub ns_ak_rank: i64,
    pub f_inv_rank: i64,
}

/// Any four (or all five) ledger fields; the missing one is solved for.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct LedgerInput {
    pub mw_rank: Option<i64>,
    pub ns_a_rank: Option<i64>,
    pub ns_s_rank: Option<i64>,
    pub ns_ak_rank: Option<i64>,
    pub f_inv_rank: Option<i64>,
}

pub fn ledger_solve(known: LedgerInput) -> Result<RankLedger> {
    let fields = [
        ("mw_rank", known.mw_rank),
        ("ns_a_rank", known.ns_a_rank),
        ("ns_s_rank", known.ns_s_rank),
        ("ns_ak_rank", known.ns_ak_rank),
        ("f_inv_rank", known.f_inv_rank),
    ];
    let supplied = fields.iter().filter(|(_, v)| v.is_some()).count();
    if supplied < 4 {
        return Err(Error::UnderDetermined(supplied));
    }
    for (field, v) in fields {
        if let Some(v) = v.filter(|&v| v < 0) {
            return Err(Error::InconsistentLedger { field, value: v });
        }
    }
    let (mw, ns_s, ns_ak, f_inv) = (known.mw_rank, known.ns_s_rank, known.ns_ak_rank, known.f_inv_rank);
    let ledger = match known.ns_a_rank {
        None => {
            let ns_a = mw.unwrap() + ns_s.unwrap() + ns_ak.unwrap() + f_inv.unwrap();
            RankLedger {
                mw_rank: mw.unwrap(),
                ns_a_rank: ns_a,
                ns_s_rank: ns_s.unwrap(),
                ns_ak_rank: ns_ak.unwrap(),
                f_inv_rank: f_inv.unwrap(),
            }
        }
        Some(ns_a) => {
            let rest = [mw, ns_s, ns_ak, f_inv];
            let known_sum: i64 = rest.iter().flatten().sum();
            let solved = ns_a - known_sum;
            let pick = |v: Option<i64>| v.unwrap_or(solved);
            let ledger = RankLedger {
                mw_rank: pick(mw),
                ns_a_rank: ns_a,
                ns_s_rank: pick(ns_s),
                ns_ak_rank: pick(ns_ak),
                f_inv_rank: pick(f_inv),
            };
            if supplied == 5 {
                if solved != 0 {
                    return Err(Error::OverDetermined {
                        ns_a,
                        mw: ledger.mw_rank,
                        ns_s: ledger.ns_s_rank,
                        ns_ak: ledger.ns_ak_rank,
                        f_inv: ledger.f_inv_rank,
                    });
                }
            } else if solved < 0 {
                let field = fields
                    .iter()
                    .find(|(_, v)| v.is_none())
                    .map_or("mw_rank", |(name, _)| *name);
                return Err(Error::InconsistentLedger { field, value: solved });
            }
            ledger
        }
    };
    Ok(ledger)
}

impl RankLedger {
    pub fn holds(&self) -> bool {
        self.ns_a_rank == self.mw_rank + self.ns_s_rank + self.ns_ak_rank + self.f_inv_rank
    }
}
