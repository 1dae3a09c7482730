use thiserror::Error;

/// Errors raised by the numerical core.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("grid mismatch between operands")]
    GridMismatch,
    #[error("phase at or past T*: radius {radius} is exhausted")]
    PastTStar { radius: f64 },
    #[error("Gevrey lift would overflow: max exponent {exponent:.1} exceeds 700; use a smaller delta or a coarser grid")]
    LiftOverflow { exponent: f64 },
    #[error("positivity violated at t={t}: min(theta + theta_E) = {min_total}, need >= {floor}")]
    Positivity { t: f64, min_total: f64, floor: f64 },
    #[error("non-finite value in {0}")]
    NonFinite(String),
    #[error("snapshot time mismatch: expected t1 - t0 = {expected}, got {got}")]
    SnapshotMismatch { expected: f64, got: f64 },
    #[error("missing ledger series: {0}")]
    MissingSeries(String),
}

pub type Result<T> = std::result::Result<T, Error>;
