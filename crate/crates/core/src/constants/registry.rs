use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{known_constant, ConstantEstimate, ConstantKind, ConstantSource};
use crate::error::{Error, Result};

/// Resolves constants by priority closed form → user-supplied → Monte Carlo.
///
/// The registry is a plain value; the formula layer only reads it.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ConstantRegistry {
    user: BTreeMap<String, ConstantEstimate>,
    monte_carlo: BTreeMap<String, ConstantEstimate>,
}

impl ConstantRegistry {
    pub fn new() -> Self {
        Self::default()
    }

    /// Records a user-supplied value with its standard error.
    pub fn insert_user(&mut self, kind: ConstantKind, value: f64, std_error: f64) -> Result<()> {
        if !(value > 0.0 && value.is_finite()) || !(std_error >= 0.0) {
            return Err(Error::InvalidMonteCarlo(format!(
                "constant {kind} needs a positive value and nonnegative error, got {value} ± {std_error}"
            )));
        }
        let mut e = ConstantEstimate::exact(kind, value);
        e.std_error = std_error;
        e.source = ConstantSource::UserSupplied;
        self.user.insert(kind.name(), e);
        Ok(())
    }

    pub fn with_user(mut self, kind: ConstantKind, value: f64, std_error: f64) -> Result<Self> {
        self.insert_user(kind, value, std_error)?;
        Ok(self)
    }

    /// Records a Monte Carlo estimate.
    pub fn insert_estimate(&mut self, estimate: ConstantEstimate) -> Result<()> {
        if estimate.source != ConstantSource::MonteCarlo || !(estimate.value > 0.0) {
            return Err(Error::InvalidMonteCarlo(format!("{} is not a usable Monte Carlo estimate", estimate.name())));
        }
        self.monte_carlo.insert(estimate.kind.name(), estimate);
        Ok(())
    }

    pub fn resolve(&self, kind: &ConstantKind) -> Result<ConstantEstimate> {
        let key = kind.name();
        known_constant(kind)
            .or_else(|| self.user.get(&key).cloned())
            .or_else(|| self.monte_carlo.get(&key).cloned())
            .ok_or(Error::MissingConstant(key))
    }

    pub fn pickands(&self, alpha: f64) -> Result<ConstantEstimate> {
        self.resolve(&ConstantKind::Pickands { alpha })
    }

    pub fn piterbarg(&self, alpha: f64, b: f64, two_sided: bool) -> Result<ConstantEstimate> {
        if two_sided {
            self.resolve(&ConstantKind::PiterbargTwoSided { alpha, b })
        } else {
            self.resolve(&ConstantKind::Piterbarg { alpha, b })
        }
    }
}
