use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("bad prime {0}: excluded, even, composite or too large")]
    BadPrime(u64),

    #[error("malformed family config: {0}")]
    MalformedConfig(String),

    #[error("degenerate family: {0}")]
    DegenerateFamily(String),

    #[error("fiber t={t} is singular mod {p}")]
    SingularFiber { p: u64, t: u64 },

    #[error("t1^2 - t2 is odd (t1={t1}, t2={t2}): point counts are inconsistent")]
    ParityViolation { t1: i64, t2: i64 },

    #[error("prime {got} arrived after {prev}; summaries must be ascending")]
    OutOfOrderPrime { prev: u64, got: u64 },

    #[error("need at least {needed} primes for a residue estimate, have {have}")]
    InsufficientData { needed: usize, have: usize },

    #[error("the trivial-trace hypothesis is not asserted for family `{0}`")]
    HypothesisNotAsserted(String),

    #[error("inconsistent rank ledger: {field} would be {value}")]
    InconsistentLedger { field: &'static str, value: i64 },

    #[error("over-determined rank ledger: {ns_a} != {mw} + {ns_s} + {ns_ak} + {f_inv}")]
    OverDetermined {
        ns_a: i64,
        mw: i64,
        ns_s: i64,
        ns_ak: i64,
        f_inv: i64,
    },

    #[error("ledger needs at least four known fields, got {0}")]
    UnderDetermined(usize),

    #[error("count mismatch at p={p}: fiberwise {fiberwise} != direct {direct}")]
    MismatchBug { p: u64, fiberwise: u64, direct: u64 },

    #[error("operation requires genus {expected}, family has genus {found}")]
    UnsupportedGenus { expected: u32, found: u32 },

    #[error("corrupt artifact {path}: {reason}")]
    CorruptArtifact { path: PathBuf, reason: String },

    #[error("invalid run configuration: {0}")]
    InvalidConfig(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}
