//! Leading-order tail formulas `P(sup > u) ≈ C·u^e·Ψ(x(u))`.
//!
//! Every formula returns an [`AsymptoticResult`] carrying the prefactor `C`,
//! the exponent `e`, the Gaussian argument `x(u)` and the constants that went
//! into `C`, so that `value = C·u^e·Ψ(x)` can be recomputed from the record.

use std::f64::consts::{E, PI};

use serde::{Deserialize, Serialize};

use crate::constants::{ConstantEstimate, ConstantKind, ConstantRegistry, ConstantSource, Drift, LimitFieldSpec};
use crate::error::{Error, Result};
use crate::mc::Z95;
use crate::params::{classify_case, cmp_exponent, exponent_eq, CaseTag, FieldParams, SegmentGeometry};
use crate::special::{gamma, log_psi, psi, PSI_UNDERFLOW};

/// A constant as it entered a prefactor, raised to `power`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConstantUse {
    pub name: String,
    pub value: f64,
    pub std_error: f64,
    pub source: ConstantSource,
    pub power: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AsymptoticResult {
    /// Formula family, e.g. `segment-maximum` or `shepp-brownian-bridge`.
    pub formula: String,
    /// Case within the family, e.g. a [`CaseTag`] label.
    pub case: String,
    pub u: f64,
    /// `prefactor·u^polynomial_exponent·Ψ(gaussian_argument)`, or 0 on underflow.
    pub value: f64,
    pub prefactor: f64,
    pub polynomial_exponent: f64,
    pub gaussian_argument: f64,
    pub constants_used: Vec<ConstantUse>,
    /// Range of `value` when every estimated constant moves by ±1.96 standard errors.
    pub value_interval: Option<[f64; 2]>,
    /// `ln value`, finite even when `value` underflows.
    pub log_value: f64,
    /// `value` fell below [`PSI_UNDERFLOW`] and was reported as 0.
    pub underflow: bool,
}

impl AsymptoticResult {
    /// `prefactor·u^e·Ψ(x)` from the stored fields.
    pub fn recompute(&self) -> f64 {
        self.prefactor * self.u.powf(self.polynomial_exponent) * psi(self.gaussian_argument)
    }
}

/// Maximum loss `χ1` or span `χ2`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Which {
    Chi1,
    Chi2,
}

impl Which {
    fn factor(self) -> f64 {
        match self {
            Which::Chi1 => 0.5,
            Which::Chi2 => 1.0,
        }
    }

    fn label(self) -> &'static str {
        match self {
            Which::Chi1 => "chi1",
            Which::Chi2 => "chi2",
        }
    }
}

struct Formula {
    formula: &'static str,
    case: String,
    prefactor: f64,
    exponent: f64,
    argument: f64,
    constants: Vec<ConstantUse>,
}

impl Formula {
    fn new(formula: &'static str, case: impl Into<String>) -> Self {
        Self { formula, case: case.into(), prefactor: 1.0, exponent: 0.0, argument: 0.0, constants: Vec::new() }
    }

    /// Multiplies the prefactor by `c^power`.
    fn constant(&mut self, c: ConstantEstimate, power: f64) {
        self.prefactor *= c.value.powf(power);
        let name = c.name();
        if let Some(prev) = self.constants.iter_mut().find(|k| k.name == name) {
            prev.power += power;
        } else {
            self.constants.push(ConstantUse { name, value: c.value, std_error: c.std_error, source: c.source, power });
        }
    }

    fn finish(self, u: f64) -> AsymptoticResult {
        let raw = self.prefactor * u.powf(self.exponent) * psi(self.argument);
        let log_value = self.prefactor.ln() + self.exponent * u.ln() + log_psi(self.argument);
        let underflow = raw < PSI_UNDERFLOW;
        let value = if underflow { 0.0 } else { raw };
        let value_interval = self.constants.iter().any(|c| c.std_error > 0.0).then(|| {
            let scale = |sign: f64| {
                self.constants
                    .iter()
                    .map(|c| ((c.value + sign * Z95 * c.std_error).max(0.0) / c.value).powf(c.power))
                    .product::<f64>()
            };
            [value * scale(-1.0), value * scale(1.0)]
        });
        AsymptoticResult {
            formula: self.formula.to_string(),
            case: self.case,
            u,
            value,
            prefactor: self.prefactor,
            polynomial_exponent: self.exponent,
            gaussian_argument: self.argument,
            constants_used: self.constants,
            value_interval,
            log_value,
            underflow,
        }
    }
}

fn check_u(u: f64) -> Result<()> {
    if u > 0.0 && u.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidThreshold(u))
    }
}

fn bad(msg: String) -> Error {
    Error::InvalidModel(msg)
}

/// Tail of the supremum of a field whose variance is maximal on a segment,
/// evaluated for the case selected by [`classify_case`].
///
/// An interior segment uses its length in place of `S`, `2Γ` in place of `Γ`
/// and the two-sided constants `𝓜̃`, `𝒫̃`.
pub fn theorem_tail(
    p: &FieldParams,
    geom: &SegmentGeometry,
    u: f64,
    registry: &ConstantRegistry,
) -> Result<AsymptoticResult> {
    check_u(u)?;
    let (a1, a2, a3, b) = (p.a1(), p.a2(), p.a3(), p.b());
    let (al1, al2, beta) = (p.alpha1(), p.alpha2(), p.beta());
    let two_sided = geom.is_interior();
    let case = classify_case(p);
    let mut f = Formula::new("segment-maximum", case.label());
    f.prefactor = geom.length;
    f.argument = u;
    match case {
        CaseTag::I | CaseTag::A3ZeroI => {
            let g = gamma(1.0 / beta + 1.0);
            f.prefactor *= if two_sided { 2.0 * g } else { g } * a1 * a2 * b.powf(-1.0 / beta);
            f.constant(registry.pickands(al1)?, 1.0);
            f.constant(registry.pickands(al2)?, 1.0);
            f.exponent = 2.0 / al2 + 2.0 / al1 - 2.0 / beta;
        }
        CaseTag::II => {
            // The local field has increments |a1 Δs|^α + |a2 Δt + a3 Δs|^α, i.e.
            // B̃(a1 s) + B(a2 t − (−a3) s).
            let spec = LimitFieldSpec::y1(a1, a2, -a3, al1, Drift::Power { b, beta: al1 })?;
            let kind =
                if two_sided { ConstantKind::GeneralizedTwoSided { spec } } else { ConstantKind::Generalized { spec } };
            f.constant(registry.resolve(&kind)?, 1.0);
            f.exponent = 2.0 / al1;
        }
        CaseTag::III | CaseTag::A3ZeroII => {
            f.prefactor *= a1 * a2;
            f.constant(registry.piterbarg(al2, b * a2.powf(-al2), two_sided)?, 1.0);
            f.constant(registry.pickands(al1)?, 1.0);
            f.exponent = 2.0 / al1;
        }
        CaseTag::IV => {
            f.prefactor *= (a1.powf(al1) + a3.abs().powf(al1)).powf(1.0 / al1);
            f.constant(registry.pickands(al1)?, 1.0);
            f.exponent = 2.0 / al1;
        }
        CaseTag::V | CaseTag::A3ZeroIII => {
            f.prefactor *= a1;
            f.constant(registry.pickands(al1)?, 1.0);
            f.exponent = 2.0 / al1;
        }
        CaseTag::VI => {
            f.prefactor *= a1;
            f.constant(registry.piterbarg(al1, b * (a3.abs() / (a1 * a2)).powf(al1), two_sided)?, 1.0);
            f.constant(registry.pickands(al2)?, 1.0);
            f.exponent = 2.0 / al2;
        }
        CaseTag::VII => {
            f.prefactor *= a3.abs();
            f.constant(registry.pickands(al2)?, 1.0);
            f.exponent = 2.0 / al2;
        }
    }
    Ok(f.finish(u))
}

/// Local behaviour of the autocovariance `r` of a stationary process used by
/// the Shepp-statistic formula:
/// `r(t) = r(T) + a1 (T − t)^α1 (1 + o(1))` as `t ↑ T` and
/// `r(t) = 1 − a2 t^α2 (1 + o(1))` as `t ↓ 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SheppStationarySpec {
    pub r_t: f64,
    pub a1: f64,
    pub alpha1: f64,
    pub a2: f64,
    pub alpha2: f64,
    /// Extent of the start point `s`.
    pub s: f64,
    /// Extent of the lag `t`.
    pub t: f64,
}

impl SheppStationarySpec {
    /// Slepian process `B(t+1) − B(t)` on `[0,1] × [0,1/2]`.
    pub fn slepian() -> Self {
        Self { r_t: 0.5, a1: 1.0, alpha1: 1.0, a2: 1.0, alpha2: 1.0, s: 1.0, t: 0.5 }
    }

    /// Ornstein–Uhlenbeck process `r(t) = e^{−t}` on `[0,1]²`.
    pub fn ornstein_uhlenbeck() -> Self {
        Self { r_t: E.recip(), a1: E.recip(), alpha1: 1.0, a2: 1.0, alpha2: 1.0, s: 1.0, t: 1.0 }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.r_t > -1.0 && self.r_t < 1.0) {
            return Err(bad(format!("r(T) = {} outside (-1,1)", self.r_t)));
        }
        for (name, v) in [("a1", self.a1), ("a2", self.a2), ("alpha1", self.alpha1), ("S", self.s), ("T", self.t)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(bad(format!("{name} = {v} must be positive")));
            }
        }
        if !(self.alpha2 > 0.0 && self.alpha2 < 2.0) {
            return Err(bad(format!("alpha2 = {} outside (0,2)", self.alpha2)));
        }
        Ok(())
    }

    /// `√(2(1 − r(T)))`.
    pub fn rho_t(&self) -> f64 {
        (2.0 * (1.0 - self.r_t)).sqrt()
    }

    pub fn b1(&self) -> f64 {
        self.a1 / (2.0 * (1.0 - self.r_t))
    }

    pub fn b2(&self) -> f64 {
        self.a2 / (2.0 * (1.0 - self.r_t))
    }

    /// Limit field of the equal-exponent case.
    pub fn limit_field(&self) -> Result<LimitFieldSpec> {
        LimitFieldSpec::shepp_stationary(self.b1(), self.b2(), self.alpha2)
    }
}

/// Tail of `sup_{[0,S]×[0,T]} X(s+t) − X(s)` for a stationary process `X`.
pub fn shepp_stationary_tail(
    spec: &SheppStationarySpec,
    u: f64,
    registry: &ConstantRegistry,
) -> Result<AsymptoticResult> {
    check_u(u)?;
    spec.validate()?;
    let (al1, al2) = (spec.alpha1, spec.alpha2);
    let (b1, b2, rho) = (spec.b1(), spec.b2(), spec.rho_t());
    let order = cmp_exponent(al1, al2);
    let case = match order {
        std::cmp::Ordering::Greater => "alpha1>alpha2",
        std::cmp::Ordering::Equal => "alpha1=alpha2",
        std::cmp::Ordering::Less => "alpha1<alpha2",
    };
    let mut f = Formula::new("shepp-stationary", case);
    f.prefactor = spec.s;
    f.argument = u / rho;
    match order {
        std::cmp::Ordering::Greater => {
            f.prefactor *= gamma(1.0 / al1 + 1.0) * b2.powf(2.0 / al2) * b1.powf(-1.0 / al1);
            f.constant(registry.pickands(al2)?, 2.0);
            f.exponent = 4.0 / al2 - 2.0 / al1;
        }
        std::cmp::Ordering::Equal => {
            f.constant(registry.resolve(&ConstantKind::Generalized { spec: spec.limit_field()? })?, 1.0);
            f.exponent = 2.0 / al2;
        }
        std::cmp::Ordering::Less => {
            f.prefactor *= (2.0 * b2).powf(1.0 / al2);
            f.constant(registry.pickands(al2)?, 1.0);
            f.exponent = 2.0 / al2;
        }
    }
    // The formula is polynomial in u/ρ; fold ρ^{−e} into the prefactor.
    f.prefactor *= rho.powf(-f.exponent);
    Ok(f.finish(u))
}

/// `2^{5/2}·√π·u³·Ψ(2u)`: Shepp statistic of the Brownian bridge on `[0,1/2]²`.
pub fn shepp_bb_tail(u: f64) -> Result<AsymptoticResult> {
    check_u(u)?;
    let mut f = Formula::new("shepp-brownian-bridge", "");
    f.prefactor = 2f64.powf(2.5) * PI.sqrt();
    f.exponent = 3.0;
    f.argument = 2.0 * u;
    Ok(f.finish(u))
}

/// Shepp statistic of fBm on `[0,S] × [0,1]`.
pub fn shepp_fbm_tail(alpha: f64, s: f64, u: f64, registry: &ConstantRegistry) -> Result<AsymptoticResult> {
    check_u(u)?;
    if !(alpha > 0.0 && alpha < 2.0) {
        return Err(bad(format!("alpha = {alpha} outside (0,2)")));
    }
    if !(s > 0.0 && s.is_finite()) {
        return Err(bad(format!("S = {s} must be positive")));
    }
    let order = cmp_exponent(alpha, 1.0);
    let case = match order {
        std::cmp::Ordering::Less => "alpha<1",
        std::cmp::Ordering::Equal => "alpha=1",
        std::cmp::Ordering::Greater => "alpha>1",
    };
    let mut f = Formula::new("shepp-fbm", case);
    f.prefactor = s;
    f.argument = u;
    match order {
        std::cmp::Ordering::Less => {
            f.prefactor *= 2f64.powf(1.0 - 2.0 / alpha) / alpha;
            f.constant(registry.pickands(alpha)?, 2.0);
            f.exponent = 4.0 / alpha - 2.0;
        }
        std::cmp::Ordering::Equal => {
            f.constant(registry.resolve(&ConstantKind::Generalized { spec: LimitFieldSpec::fbm_shepp() })?, 1.0);
            f.exponent = 2.0;
        }
        std::cmp::Ordering::Greater => {
            f.constant(registry.pickands(alpha)?, 1.0);
            f.exponent = 2.0 / alpha;
        }
    }
    Ok(f.finish(u))
}

/// Local behaviour of the autocovariance of a stationary process on `[0,1]`
/// for the maximum-loss and span formulas:
/// `r(t) = r(t_m) + a1 |t − t_m|^α1 (1 + o(1))` near the unique minimizer
/// `t_m ∈ (0,1)` and `r(t) = 1 − a2 t^α2 (1 + o(1))` near 0.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MaxLossSpec {
    pub t_m: f64,
    pub r_tm: f64,
    pub a1: f64,
    pub alpha1: f64,
    pub a2: f64,
    pub alpha2: f64,
}

impl MaxLossSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.t_m > 0.0 && self.t_m < 1.0) {
            return Err(bad(format!("t_m = {} outside (0,1)", self.t_m)));
        }
        if !(1.0 - self.r_tm > 0.0) || !self.r_tm.is_finite() {
            return Err(bad(format!("r(t_m) = {} must be below 1", self.r_tm)));
        }
        for (name, v) in [("a1", self.a1), ("a2", self.a2), ("alpha1", self.alpha1)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(bad(format!("{name} = {v} must be positive")));
            }
        }
        if !(self.alpha2 > 0.0 && self.alpha2 < 2.0) {
            return Err(bad(format!("alpha2 = {} outside (0,2)", self.alpha2)));
        }
        Ok(())
    }

    /// Expansion coefficients of `r(t) = e^{−λt}·cos(ωt)`, whose minimum on
    /// `[0,1]` is interior when `π − atan(λ/ω) < ω < 2π − atan(λ/ω)`.
    pub fn damped_cosine(lambda: f64, omega: f64) -> Result<Self> {
        if !(lambda > 0.0 && omega > 0.0) {
            return Err(bad(format!("damped cosine needs λ, ω > 0, got {lambda}, {omega}")));
        }
        let phase = (lambda / omega).atan();
        let t_m = (PI - phase) / omega;
        if !(t_m < 1.0 && (2.0 * PI - phase) / omega > 1.0) {
            return Err(bad(format!("damped cosine (λ={lambda}, ω={omega}) has no unique interior minimum on [0,1]")));
        }
        let r = |t: f64| (-lambda * t).exp() * (omega * t).cos();
        let r2 = (-lambda * t_m).exp()
            * ((lambda * lambda - omega * omega) * (omega * t_m).cos() + 2.0 * lambda * omega * (omega * t_m).sin());
        let spec = Self { t_m, r_tm: r(t_m), a1: r2 / 2.0, alpha1: 2.0, a2: lambda, alpha2: 1.0 };
        spec.validate()?;
        Ok(spec)
    }
}

/// Maximum loss (`Chi1`) or span (`Chi2`) of a stationary process on `[0,1]`.
pub fn max_loss_span_tail(
    spec: &MaxLossSpec,
    u: f64,
    which: Which,
    registry: &ConstantRegistry,
) -> Result<AsymptoticResult> {
    check_u(u)?;
    spec.validate()?;
    let (al1, al2) = (spec.alpha1, spec.alpha2);
    let k = 2.0 - 4.0 / al2 + 2.0 / al1;
    let one_minus_r = 1.0 - spec.r_tm;
    let mut f = Formula::new("max-loss-span", which.label());
    f.prefactor = which.factor() * 2f64.powf(k) * (1.0 - spec.t_m) * spec.a2.powf(2.0 / al2) * one_minus_r.powf(k);
    f.constant(registry.pickands(al2)?, 2.0);
    f.exponent = 4.0 / al2 - 2.0 / al1;
    f.argument = u / (2.0 * one_minus_r).sqrt();
    Ok(f.finish(u))
}

/// Maximum loss or span of the Brownian bridge: `χ2` tail `2^{9/2}·√π·u³·Ψ(2u)`.
pub fn bb_span_tail(u: f64, which: Which) -> Result<AsymptoticResult> {
    check_u(u)?;
    let mut f = Formula::new("brownian-bridge-span", which.label());
    f.prefactor = which.factor() * 2f64.powf(4.5) * PI.sqrt();
    f.exponent = 3.0;
    f.argument = 2.0 * u;
    Ok(f.finish(u))
}

/// Maximum loss or span of fBm on `[0,1]`.
pub fn fbm_span_tail(alpha: f64, u: f64, which: Which, registry: &ConstantRegistry) -> Result<AsymptoticResult> {
    check_u(u)?;
    if !(alpha > 0.0 && alpha < 2.0) {
        return Err(bad(format!("alpha = {alpha} outside (0,2)")));
    }
    let mut f = Formula::new("fbm-span", which.label());
    f.argument = u;
    if exponent_eq(alpha, 1.0) {
        f.case = format!("{};alpha=1", which.label());
        f.prefactor = which.factor() * 8.0;
    } else if alpha > 1.0 {
        f.case = format!("{};alpha>1", which.label());
        f.prefactor = which.factor() * 2.0;
    } else {
        f.case = format!("{};alpha<1", which.label());
        f.prefactor = which.factor() * 2f64.powf(3.0 - 2.0 / alpha) / (alpha * alpha);
        f.constant(registry.pickands(alpha)?, 2.0);
        f.exponent = 4.0 / alpha - 4.0;
    }
    Ok(f.finish(u))
}
