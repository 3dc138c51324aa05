//! Pickands, Piterbarg and generalized Pickands–Piterbarg constants: closed
//! forms, Monte Carlo estimators and a registry resolving them for the tail
//! formulas.
//!
//! Normalized constants (`𝓗_α`, `𝓜`) are by default estimated with the
//! sup-over-integral representation
//!
//! ```text
//! 𝓗 = E[ sup_x e^{V(x)} / ∫ e^{V(s,0)} ds ],   V = √2·Y − Var Y − drift,
//! ```
//!
//! with `s` running over `[−S, S]`. The plain truncated average
//! `(1/S)·E exp(sup_{[0,S]} V)` is available as [`Estimator::TruncatedAverage`].

mod estimators;
mod limit_field;
mod registry;

pub use estimators::{
    convergence_report, estimate, estimate_generalized, estimate_generalized_with, estimate_pickands,
    estimate_pickands_with, estimate_piterbarg, generalized_functional, pickands_functional, ConvergenceReport,
    FunctionalEstimate, McSettings,
};
pub use limit_field::{Drift, LimitFieldDraw, LimitFieldSampler, LimitFieldSpec, LimitVariant, StepRange};
pub use registry::ConstantRegistry;

use std::f64::consts::PI;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::params::exponent_eq;

/// Which constant, with its parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum ConstantKind {
    /// `𝓗_α`.
    Pickands { alpha: f64 },
    /// `𝒫_α^b`, sup over `t ≥ 0`.
    Piterbarg { alpha: f64, b: f64 },
    /// `𝒫̃_α^b`, sup over `t ∈ ℝ`.
    PiterbargTwoSided { alpha: f64, b: f64 },
    /// `𝓜` for `t ≥ 0`.
    Generalized { spec: LimitFieldSpec },
    /// `𝓜̃` for `t ∈ ℝ`.
    GeneralizedTwoSided { spec: LimitFieldSpec },
}

impl ConstantKind {
    /// Short human-readable name, also used as the registry key.
    pub fn name(&self) -> String {
        self.to_string()
    }

    /// The `t` range is symmetric about 0.
    pub fn is_two_sided(&self) -> bool {
        matches!(self, ConstantKind::PiterbargTwoSided { .. } | ConstantKind::GeneralizedTwoSided { .. })
    }
}

impl fmt::Display for ConstantKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ConstantKind::Pickands { alpha } => write!(f, "H_{alpha}"),
            ConstantKind::Piterbarg { alpha, b } => write!(f, "P_{alpha}^{b}"),
            ConstantKind::PiterbargTwoSided { alpha, b } => write!(f, "P~_{alpha}^{b}"),
            ConstantKind::Generalized { spec } => write!(f, "M[{spec}]"),
            ConstantKind::GeneralizedTwoSided { spec } => write!(f, "M~[{spec}]"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ConstantSource {
    ClosedForm,
    UserSupplied,
    MonteCarlo,
}

/// How a normalized constant is estimated from simulated paths.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Estimator {
    /// `sup e^V / ∫ e^{V(s,0)} ds` with `s ∈ [−S, S]`.
    #[default]
    SupOverIntegral,
    /// `(1/S)·exp(sup V)` over `[0, S]`.
    TruncatedAverage,
}

/// A constant's value with its provenance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConstantEstimate {
    pub kind: ConstantKind,
    pub value: f64,
    pub std_error: f64,
    pub source: ConstantSource,
    pub horizon_t: Option<f64>,
    /// `S`, for the generalized constants only.
    pub horizon_s: Option<f64>,
    pub grid_dt: Option<f64>,
    pub replications: Option<u64>,
    pub seed: Option<u64>,
    pub estimator: Option<Estimator>,
}

impl ConstantEstimate {
    pub fn exact(kind: ConstantKind, value: f64) -> Self {
        Self {
            kind,
            value,
            std_error: 0.0,
            source: ConstantSource::ClosedForm,
            horizon_t: None,
            horizon_s: None,
            grid_dt: None,
            replications: None,
            seed: None,
            estimator: None,
        }
    }

    pub fn name(&self) -> String {
        self.kind.name()
    }

    /// `value ± z·std_error`.
    pub fn interval(&self, z: f64) -> (f64, f64) {
        (self.value - z * self.std_error, self.value + z * self.std_error)
    }
}

/// Closed-form value, where one is known.
///
/// `𝓗_1 = 1`, `𝓗_2 = 1/√π`, `𝒫_1^b = 1 + 1/b`, `𝒫_2^b = (1 + √(1 + 1/b))/2`,
/// and the two-sided versions `𝒫̃_1^b = 2λ/(λ−1) − 2λ/(2λ−1)` with `λ = 1+b`,
/// `𝒫̃_2^b = √(1 + 1/b)`.
pub fn known_constant(kind: &ConstantKind) -> Option<ConstantEstimate> {
    let one = |a: f64| exponent_eq(a, 1.0);
    let two = |a: f64| exponent_eq(a, 2.0);
    let value = match *kind {
        ConstantKind::Pickands { alpha } if one(alpha) => 1.0,
        ConstantKind::Pickands { alpha } if two(alpha) => 1.0 / PI.sqrt(),
        ConstantKind::Piterbarg { alpha, b } if b > 0.0 && one(alpha) => 1.0 + 1.0 / b,
        ConstantKind::Piterbarg { alpha, b } if b > 0.0 && two(alpha) => (1.0 + (1.0 + 1.0 / b).sqrt()) / 2.0,
        ConstantKind::PiterbargTwoSided { alpha, b } if b > 0.0 && one(alpha) => {
            let l = 1.0 + b;
            2.0 * l / (l - 1.0) - 2.0 * l / (2.0 * l - 1.0)
        }
        ConstantKind::PiterbargTwoSided { alpha, b } if b > 0.0 && two(alpha) => (1.0 + 1.0 / b).sqrt(),
        _ => return None,
    };
    Some(ConstantEstimate::exact(*kind, value))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn closed_forms() {
        let v = |k| known_constant(&k).map(|e| e.value);
        assert_eq!(v(ConstantKind::Pickands { alpha: 1.0 }), Some(1.0));
        assert_eq!(v(ConstantKind::Pickands { alpha: 2.0 }), Some(0.564_189_583_547_756_3));
        assert_eq!(v(ConstantKind::Piterbarg { alpha: 1.0, b: 1.0 }), Some(2.0));
        assert_eq!(v(ConstantKind::Piterbarg { alpha: 2.0, b: 1.0 }), Some(1.207_106_781_186_547_5));
        assert_eq!(v(ConstantKind::Pickands { alpha: 0.5 }), None);
        assert_eq!(v(ConstantKind::Piterbarg { alpha: 1.5, b: 1.0 }), None);
        assert_eq!(v(ConstantKind::Generalized { spec: LimitFieldSpec::slepian() }), None);
        // Two-sided at b → ∞ tends to 1; at b = 1: 4 − 4/3.
        let p = v(ConstantKind::PiterbargTwoSided { alpha: 1.0, b: 1.0 }).unwrap();
        assert!((p - 8.0 / 3.0).abs() < 1e-15);
        assert!((v(ConstantKind::PiterbargTwoSided { alpha: 2.0, b: 1.0 }).unwrap() - 2f64.sqrt()).abs() < 1e-15);
        let e = known_constant(&ConstantKind::Pickands { alpha: 1.0 }).unwrap();
        assert_eq!(e.source, ConstantSource::ClosedForm);
        assert_eq!(e.std_error, 0.0);
    }

    #[test]
    fn kind_names_and_serde() {
        assert_eq!(ConstantKind::Pickands { alpha: 1.5 }.name(), "H_1.5");
        assert_eq!(ConstantKind::Piterbarg { alpha: 2.0, b: 0.5 }.name(), "P_2^0.5");
        assert_eq!(
            ConstantKind::Generalized { spec: LimitFieldSpec::slepian() }.name(),
            "M[Y1(a1=1,a2=1,a3=1,alpha1=1,alpha2=1;b=1,beta=1)]"
        );
        let k = ConstantKind::GeneralizedTwoSided { spec: LimitFieldSpec::fbm_shepp() };
        let json = serde_json::to_string(&k).unwrap();
        assert_eq!(serde_json::from_str::<ConstantKind>(&json).unwrap(), k);
    }
}
