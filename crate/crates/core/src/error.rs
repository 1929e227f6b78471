use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParams(String),

    #[error("invalid walk: {0}")]
    InvalidWalk(String),

    #[error("invalid spin chain: {0}")]
    InvalidSpins(String),

    #[error("length mismatch: expected {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },

    #[error("site pair ({i}, {j}) out of range for N = {n}")]
    IndexOutOfRange { i: usize, j: usize, n: usize },

    #[error("empty bulk: epsilon = {epsilon} leaves no interior pair for N = {n}")]
    EmptyBulk { epsilon: f64, n: usize },

    #[error("N = {n} exceeds the enumeration cap of {cap} for {what}")]
    CapExceeded { what: &'static str, n: usize, cap: usize },

    #[error("majorant violated at pair ({i}, {j}): U = {coupling:e} > bound {bound:e}")]
    MajorantViolation { i: usize, j: usize, coupling: f64, bound: f64 },

    #[error("cached energy {cached} drifted from recomputed {fresh}")]
    EnergyDrift { cached: f64, fresh: f64 },

    #[error("invalid run plan: {0}")]
    InvalidPlan(String),

    #[error("fit error: {0}")]
    Fit(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
