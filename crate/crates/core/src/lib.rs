//! Mordell–Weil rank estimation for one-parameter families of elliptic
//! curves and genus-2 Jacobians from averaged fibral Frobenius traces.
//!
//! The pipeline per prime `p` is: reduce the family ([`family`]), sum the
//! traces of Frobenius over all fibers ([`trace`]), and feed the exact
//! integer sums into the Cesàro and Dirichlet estimators ([`estimate`]).
//! [`census`] cross-checks the point counts against a direct enumeration
//! and [`runner`] drives full runs with checkpointing.

pub mod census;
pub mod error;
pub mod estimate;
pub mod family;
pub mod poly;
pub mod primes;
pub mod runner;
pub mod trace;

pub use error::{Error, Result};
pub use family::{parse_family, FamilyModP, HyperellipticFamily};
pub use primes::{sieve_primes, Fp2Elem, PrimeFieldCtx};
pub use trace::{FiberTrace, PrimeSummary, TraceOptions};

/// Estimator state in double precision, as used by the runner.
pub type Series = estimate::EstimateSeries<f64>;
pub type Checkpoint = estimate::CesaroPoint<f64>;
pub type Residues = estimate::ResidueEstimate<f64>;
pub type Rank = estimate::RankEstimate<f64>;
/// `Z[t]`, where discriminants live.
pub type IntPoly = poly::Poly<num_bigint::BigInt>;
/// An exact per-prime average `num / p`.
pub type Average = num_rational::Ratio<i64>;
