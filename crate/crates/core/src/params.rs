//! Field parameters and the case classification of the segment-maximum tail theorem.
//!
//! A [`FieldParams`] bundles the exponents and scale coefficients describing the
//! variance decay near the maximal segment `t = T` and the local correlation
//! structure there:
//!
//! ```text
//! σ(t)      = 1 − b (T − t)^β (1 + o(1))
//! r(s,t,s',t') = 1 − (|a1 (s − s')|^α1 + |a2 (t − t') + a3 (s − s')|^α2)(1 + o(1))
//! ```
//!
//! The leading-order tail depends on how `β` compares with `α1` and `α2` and on
//! whether `a3` vanishes; [`classify_case`] returns the matching [`CaseTag`].

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Interval, ParamError, ParamErrors};

/// Absolute tolerance used when the case split asks for equality of exponents.
///
/// Callers who intend equality should pass bitwise-identical values.
pub const EXPONENT_EQ_TOL: f64 = 1e-12;

/// Compares two exponents, treating values within [`EXPONENT_EQ_TOL`] as equal.
pub fn cmp_exponent(x: f64, y: f64) -> Ordering {
    if (x - y).abs() <= EXPONENT_EQ_TOL {
        Ordering::Equal
    } else if x < y {
        Ordering::Less
    } else {
        Ordering::Greater
    }
}

pub(crate) fn exponent_eq(x: f64, y: f64) -> bool {
    cmp_exponent(x, y) == Ordering::Equal
}

const EXPONENT_RANGE: Interval = Interval::left_open(0.0, 2.0);

/// Validated parameter bundle. Immutable once built.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FieldParams {
    alpha1: f64,
    alpha2: f64,
    beta: f64,
    b: f64,
    a1: f64,
    a2: f64,
    a3: f64,
    s: f64,
    t: f64,
}

/// Unvalidated parameter values, e.g. straight from a config document.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RawFieldParams {
    pub alpha1: f64,
    pub alpha2: f64,
    pub beta: f64,
    pub b: f64,
    pub a1: f64,
    pub a2: f64,
    pub a3: f64,
    #[serde(rename = "S")]
    pub s: f64,
    #[serde(rename = "T", default = "default_t")]
    pub t: f64,
}

fn default_t() -> f64 {
    1.0
}

fn check(errors: &mut Vec<ParamError>, field: &str, value: f64, allowed: Interval) {
    if !allowed.contains(value) {
        errors.push(ParamError::OutOfRange { field: field.to_string(), value, allowed });
    }
}

impl RawFieldParams {
    pub fn validate(self) -> Result<FieldParams, ParamErrors> {
        let mut errors = Vec::new();
        check(&mut errors, "alpha1", self.alpha1, EXPONENT_RANGE);
        check(&mut errors, "alpha2", self.alpha2, EXPONENT_RANGE);
        check(&mut errors, "beta", self.beta, Interval::positive());
        check(&mut errors, "b", self.b, Interval::positive());
        check(&mut errors, "a1", self.a1, Interval::positive());
        check(&mut errors, "a2", self.a2, Interval::positive());
        check(&mut errors, "a3", self.a3, Interval::open(f64::NEG_INFINITY, f64::INFINITY));
        check(&mut errors, "S", self.s, Interval::positive());
        check(&mut errors, "T", self.t, Interval::positive());
        if !errors.is_empty() {
            return Err(ParamErrors(errors));
        }
        Ok(FieldParams {
            alpha1: self.alpha1,
            alpha2: self.alpha2,
            beta: self.beta,
            b: self.b,
            a1: self.a1,
            a2: self.a2,
            a3: self.a3,
            s: self.s,
            t: self.t,
        })
    }
}

/// Maps the accepted spellings of a parameter key onto its canonical name.
pub fn canonical_key(key: &str) -> Option<&'static str> {
    let k = key.trim();
    Some(match k {
        "alpha1" | "α1" | "α₁" => "alpha1",
        "alpha2" | "α2" | "α₂" => "alpha2",
        "beta" | "β" => "beta",
        "b" => "b",
        "a1" | "a₁" => "a1",
        "a2" | "a₂" => "a2",
        "a3" | "a₃" => "a3",
        "S" | "s" => "S",
        "T" | "t" => "T",
        _ => return None,
    })
}

/// Parses a real number, accepting the Unicode minus sign.
pub fn parse_real(raw: &str) -> Option<f64> {
    let cleaned = raw.trim().replace('−', "-");
    f64::from_str(&cleaned).ok().filter(|v| !v.is_nan())
}

/// Builds [`FieldParams`] from a flat key-value map.
///
/// Keys may use ASCII (`alpha1`, `a3`, `S`) or Greek/subscript spellings
/// (`α₁`, `a₃`). `T` defaults to 1 when absent since no tail formula consumes it.
/// Every problem found is reported, not only the first.
pub fn validate_params(raw: &BTreeMap<String, String>) -> Result<FieldParams, ParamErrors> {
    let mut errors = Vec::new();
    let mut values: BTreeMap<&'static str, f64> = BTreeMap::new();
    for (key, value) in raw {
        match canonical_key(key) {
            None => errors.push(ParamError::Unknown(key.clone())),
            Some(canon) => match parse_real(value) {
                Some(v) => {
                    values.insert(canon, v);
                }
                None => errors.push(ParamError::Unparsable { field: canon.to_string(), raw: value.clone() }),
            },
        }
    }
    let mut get = |name: &'static str| match values.get(name) {
        Some(v) => *v,
        None => {
            if name == "T" {
                default_t()
            } else {
                if !errors.iter().any(|e| matches!(e, ParamError::Unparsable { field, .. } if field == name)) {
                    errors.push(ParamError::Missing(name.to_string()));
                }
                f64::NAN
            }
        }
    };
    let candidate = RawFieldParams {
        alpha1: get("alpha1"),
        alpha2: get("alpha2"),
        beta: get("beta"),
        b: get("b"),
        a1: get("a1"),
        a2: get("a2"),
        a3: get("a3"),
        s: get("S"),
        t: get("T"),
    };
    if !errors.is_empty() {
        return Err(ParamErrors(errors));
    }
    candidate.validate()
}

impl FieldParams {
    pub fn alpha1(&self) -> f64 {
        self.alpha1
    }
    pub fn alpha2(&self) -> f64 {
        self.alpha2
    }
    pub fn beta(&self) -> f64 {
        self.beta
    }
    pub fn b(&self) -> f64 {
        self.b
    }
    pub fn a1(&self) -> f64 {
        self.a1
    }
    pub fn a2(&self) -> f64 {
        self.a2
    }
    pub fn a3(&self) -> f64 {
        self.a3
    }
    pub fn s(&self) -> f64 {
        self.s
    }
    pub fn t(&self) -> f64 {
        self.t
    }

    pub fn to_raw(&self) -> RawFieldParams {
        RawFieldParams {
            alpha1: self.alpha1,
            alpha2: self.alpha2,
            beta: self.beta,
            b: self.b,
            a1: self.a1,
            a2: self.a2,
            a3: self.a3,
            s: self.s,
            t: self.t,
        }
    }

    pub fn case(&self) -> CaseTag {
        classify_case(self)
    }
}

impl<'de> Deserialize<'de> for FieldParams {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        RawFieldParams::deserialize(d)?.validate().map_err(serde::de::Error::custom)
    }
}

/// Where the maximal-variance segment sits inside the index set.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SegmentKind {
    /// The segment `t = T` on the boundary of the rectangle `[0,S]×[0,T]`.
    BoundaryRectangle,
    /// A segment of length ℓ strictly inside a convex set, parallel to the s-axis.
    InteriorSegment,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SegmentGeometry {
    pub kind: SegmentKind,
    pub length: f64,
}

impl SegmentGeometry {
    pub fn boundary(params: &FieldParams) -> Self {
        Self { kind: SegmentKind::BoundaryRectangle, length: params.s() }
    }

    pub fn interior(length: f64) -> Result<Self, ParamErrors> {
        if !Interval::positive().contains(length) {
            return Err(ParamErrors(vec![ParamError::OutOfRange {
                field: "length".into(),
                value: length,
                allowed: Interval::positive(),
            }]));
        }
        Ok(Self { kind: SegmentKind::InteriorSegment, length })
    }

    /// Interior segments use two-sided constants and a doubled Gamma factor.
    pub fn is_interior(&self) -> bool {
        self.kind == SegmentKind::InteriorSegment
    }
}

/// The tail regime selected by the ordering of `(β, α1, α2)` and by `a3 = 0`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum CaseTag {
    I,
    II,
    III,
    IV,
    V,
    VI,
    VII,
    #[serde(rename = "A3ZERO-I")]
    A3ZeroI,
    #[serde(rename = "A3ZERO-II")]
    A3ZeroII,
    #[serde(rename = "A3ZERO-III")]
    A3ZeroIII,
}

impl CaseTag {
    pub const ALL: [CaseTag; 10] = [
        CaseTag::I,
        CaseTag::II,
        CaseTag::III,
        CaseTag::IV,
        CaseTag::V,
        CaseTag::VI,
        CaseTag::VII,
        CaseTag::A3ZeroI,
        CaseTag::A3ZeroII,
        CaseTag::A3ZeroIII,
    ];

    pub fn label(&self) -> &'static str {
        match self {
            CaseTag::I => "I",
            CaseTag::II => "II",
            CaseTag::III => "III",
            CaseTag::IV => "IV",
            CaseTag::V => "V",
            CaseTag::VI => "VI",
            CaseTag::VII => "VII",
            CaseTag::A3ZeroI => "A3ZERO-I",
            CaseTag::A3ZeroII => "A3ZERO-II",
            CaseTag::A3ZeroIII => "A3ZERO-III",
        }
    }
}

impl fmt::Display for CaseTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for CaseTag {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        CaseTag::ALL
            .into_iter()
            .find(|c| c.label().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| format!("unknown case tag `{s}`"))
    }
}

/// Selects the tail regime. Total on valid parameters.
///
/// With `a3 = 0` (compared exactly) only `β` versus `α2` matters. Otherwise the
/// seven-way split is on `α1` versus `α2` first, then `β` against the larger
/// exponent.
pub fn classify_case(p: &FieldParams) -> CaseTag {
    use Ordering::*;
    let beta_vs_a2 = cmp_exponent(p.beta, p.alpha2);
    if p.a3 == 0.0 {
        return match beta_vs_a2 {
            Greater => CaseTag::A3ZeroI,
            Equal => CaseTag::A3ZeroII,
            Less => CaseTag::A3ZeroIII,
        };
    }
    match cmp_exponent(p.alpha1, p.alpha2) {
        Equal => match beta_vs_a2 {
            Greater => CaseTag::I,
            Equal => CaseTag::II,
            Less => CaseTag::IV,
        },
        Less => match beta_vs_a2 {
            Greater => CaseTag::I,
            Equal => CaseTag::III,
            Less => CaseTag::V,
        },
        Greater => match cmp_exponent(p.beta, p.alpha1) {
            Greater => CaseTag::I,
            Equal => CaseTag::VI,
            Less => CaseTag::VII,
        },
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn raw(alpha1: f64, alpha2: f64, beta: f64, a3: f64) -> RawFieldParams {
        RawFieldParams { alpha1, alpha2, beta, b: 1.0, a1: 1.0, a2: 1.0, a3, s: 1.0, t: 0.5 }
    }

    fn map(pairs: &[(&str, &str)]) -> BTreeMap<String, String> {
        pairs.iter().map(|(k, v)| (k.to_string(), v.to_string())).collect()
    }

    #[test]
    fn slepian_setup_is_valid() {
        let p = validate_params(&map(&[
            ("alpha1", "1"),
            ("alpha2", "1"),
            ("beta", "1"),
            ("b", "1"),
            ("a1", "1"),
            ("a2", "1"),
            ("a3", "-1"),
            ("S", "1"),
            ("T", "0.5"),
        ]))
        .unwrap();
        assert_eq!(p.t(), 0.5);
        assert_eq!(p.a3(), -1.0);
    }

    #[test]
    fn alpha1_above_two_is_rejected() {
        let err = raw(2.5, 1.0, 1.0, -1.0).validate().unwrap_err();
        assert_eq!(
            err.0,
            vec![ParamError::OutOfRange { field: "alpha1".into(), value: 2.5, allowed: Interval::left_open(0.0, 2.0) }]
        );
        assert!(err.to_string().contains("alpha1 = 2.5"));
        assert!(err.to_string().contains("(0,2]"));
    }

    #[test]
    fn zero_b_is_rejected() {
        let mut r = raw(1.0, 1.0, 1.0, -1.0);
        r.b = 0.0;
        let err = r.validate().unwrap_err();
        assert_eq!(
            err.0,
            vec![ParamError::OutOfRange { field: "b".into(), value: 0.0, allowed: Interval::positive() }]
        );
    }

    #[test]
    fn every_violation_is_reported() {
        let mut r = raw(0.0, 3.0, -1.0, 0.0);
        r.s = -2.0;
        let err = r.validate().unwrap_err();
        let fields: Vec<_> = err
            .iter()
            .map(|e| match e {
                ParamError::OutOfRange { field, .. } => field.clone(),
                other => panic!("unexpected {other:?}"),
            })
            .collect();
        assert_eq!(fields, ["alpha1", "alpha2", "beta", "S"]);
    }

    #[test]
    fn greek_keys_unicode_minus_and_default_t() {
        let p = validate_params(&map(&[
            ("α₁", "1"),
            ("α₂", "1"),
            ("β", "2"),
            ("b", "1"),
            ("a₁", "1"),
            ("a₂", "1"),
            ("a₃", "−1"),
            ("S", "1"),
        ]))
        .unwrap();
        assert_eq!(p.a3(), -1.0);
        assert_eq!(p.t(), 1.0);
        assert_eq!(classify_case(&p), CaseTag::I);
    }

    #[test]
    fn unknown_missing_and_unparsable_keys() {
        let err = validate_params(&map(&[("alpha1", "x"), ("gamma", "1")])).unwrap_err();
        assert!(err.0.contains(&ParamError::Unknown("gamma".into())));
        assert!(err.0.contains(&ParamError::Unparsable { field: "alpha1".into(), raw: "x".into() }));
        assert!(err.0.contains(&ParamError::Missing("beta".into())));
        assert!(!err.0.contains(&ParamError::Missing("alpha1".into())));
    }

    #[test]
    fn theorem_examples() {
        let case = |a1: f64, a2: f64, b: f64, a3: f64| classify_case(&raw(a1, a2, b, a3).validate().unwrap());
        assert_eq!(case(1.0, 1.0, 3.0, -1.0), CaseTag::I);
        assert_eq!(case(1.0, 1.0, 1.0, -1.0), CaseTag::II);
        assert_eq!(case(1.0, 2.0, 2.0, -1.0), CaseTag::III);
        assert_eq!(case(1.0, 1.0, 0.5, 0.0), CaseTag::A3ZeroIII);
        assert_eq!(case(1.0, 1.0, 0.5, -1.0), CaseTag::IV);
        assert_eq!(case(1.0, 1.5, 1.0, 2.0), CaseTag::V);
        assert_eq!(case(1.5, 1.0, 1.5, 2.0), CaseTag::VI);
        assert_eq!(case(1.5, 1.0, 1.0, 2.0), CaseTag::VII);
    }

    #[test]
    fn equality_uses_declared_tolerance() {
        let r = raw(1.0, 1.0, 1.0 + 5e-13, -1.0);
        assert_eq!(classify_case(&r.validate().unwrap()), CaseTag::II);
        let r = raw(1.0, 1.0, 1.0 + 1e-9, -1.0);
        assert_eq!(classify_case(&r.validate().unwrap()), CaseTag::I);
    }

    #[test]
    fn case_tag_round_trips_through_text() {
        for tag in CaseTag::ALL {
            assert_eq!(tag.label().parse::<CaseTag>().unwrap(), tag);
            let json = serde_json::to_string(&tag).unwrap();
            assert_eq!(json, format!("\"{}\"", tag.label()));
        }
    }
}
