use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// An interval of admissible parameter values, used in diagnostics.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
    pub lo_closed: bool,
    pub hi_closed: bool,
}

impl Interval {
    pub const fn open(lo: f64, hi: f64) -> Self {
        Self { lo, hi, lo_closed: false, hi_closed: false }
    }

    pub const fn left_open(lo: f64, hi: f64) -> Self {
        Self { lo, hi, lo_closed: false, hi_closed: true }
    }

    pub const fn positive() -> Self {
        Self::open(0.0, f64::INFINITY)
    }

    pub fn contains(&self, x: f64) -> bool {
        if x.is_nan() {
            return false;
        }
        let above = if self.lo_closed { x >= self.lo } else { x > self.lo };
        let below = if self.hi_closed { x <= self.hi } else { x < self.hi };
        above && below
    }
}

impl fmt::Display for Interval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let open = if self.lo_closed { '[' } else { '(' };
        let close = if self.hi_closed { ']' } else { ')' };
        let hi = if self.hi.is_infinite() { "∞".to_string() } else { self.hi.to_string() };
        let lo = if self.lo.is_infinite() { "-∞".to_string() } else { self.lo.to_string() };
        write!(f, "{open}{lo},{hi}{close}")
    }
}

/// A single problem found while validating a parameter set.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum ParamError {
    #[error("{field} = {value} is out of range, allowed {allowed}")]
    OutOfRange { field: String, value: f64, allowed: Interval },
    #[error("missing required parameter `{0}`")]
    Missing(String),
    #[error("unknown parameter `{0}`")]
    Unknown(String),
    #[error("parameter `{field}` has unparsable value `{raw}`")]
    Unparsable { field: String, raw: String },
}

/// All problems found in one parameter set; never empty.
#[derive(Debug, Clone, PartialEq)]
pub struct ParamErrors(pub Vec<ParamError>);

impl ParamErrors {
    pub fn iter(&self) -> impl Iterator<Item = &ParamError> {
        self.0.iter()
    }
}

impl fmt::Display for ParamErrors {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, e) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str("; ")?;
            }
            write!(f, "{e}")?;
        }
        Ok(())
    }
}

impl std::error::Error for ParamErrors {}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameters: {0}")]
    Params(#[from] ParamErrors),
    #[error("circulant embedding failed: smallest eigenvalue {min_eigenvalue:e} vs largest {max_eigenvalue:e}")]
    EmbeddingFailed { min_eigenvalue: f64, max_eigenvalue: f64 },
    #[error("covariance matrix is not positive definite (pivot {pivot} = {value:e})")]
    NotPositiveDefinite { pivot: usize, value: f64 },
    #[error("grid mismatch: {0}")]
    GridMismatch(String),
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("invalid model: {0}")]
    InvalidModel(String),
    #[error("invalid limit-field spec: {0}")]
    InvalidSpec(String),
    #[error("missing constant {0}")]
    MissingConstant(String),
    #[error("invalid threshold u = {0}")]
    InvalidThreshold(f64),
    #[error("invalid scenario: {0}")]
    InvalidScenario(String),
    #[error("insufficient data: {usable} usable thresholds, need at least {required}")]
    InsufficientData { usable: usize, required: usize },
    #[error("invalid Monte Carlo setup: {0}")]
    InvalidMonteCarlo(String),
    #[error("serialization: {0}")]
    Io(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
