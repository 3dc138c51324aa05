use std::f64::consts::SQRT_2;
use std::fmt;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::params::{cmp_exponent, exponent_eq};
use crate::sim::{CovarianceModel, FieldSample, Grid1D, PathSimulator, Scratch, SimOptions};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum LimitVariant {
    /// `B̃_{α1}(a1 s) + B_{α2}(a2 t − a3 s)` with `α1 = α2`.
    Y1,
    /// `B̃_{α1}(a1 s) + B_{α2}(a2 t)` with `α1 < α2`.
    Y2,
}

/// Deterministic drift subtracted in the `t` direction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case")]
pub enum Drift {
    None,
    /// `b·|t|^β`.
    Power {
        b: f64,
        beta: f64,
    },
}

impl Drift {
    pub fn at(&self, t: f64) -> f64 {
        match *self {
            Drift::None => 0.0,
            Drift::Power { b, beta } => b * t.abs().powf(beta),
        }
    }
}

/// A limiting field `Y` built from two independent fBms, plus the drift in `t`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LimitFieldSpec {
    pub variant: LimitVariant,
    pub a1: f64,
    pub a2: f64,
    /// Ignored by `Y2`.
    pub a3: f64,
    pub alpha1: f64,
    pub alpha2: f64,
    pub drift: Drift,
}

impl LimitFieldSpec {
    pub fn y1(a1: f64, a2: f64, a3: f64, alpha: f64, drift: Drift) -> Result<Self> {
        let spec = Self { variant: LimitVariant::Y1, a1, a2, a3, alpha1: alpha, alpha2: alpha, drift };
        spec.validate()?;
        Ok(spec)
    }

    pub fn y2(a1: f64, a2: f64, alpha1: f64, alpha2: f64, drift: Drift) -> Result<Self> {
        let spec = Self { variant: LimitVariant::Y2, a1, a2, a3: 0.0, alpha1, alpha2, drift };
        spec.validate()?;
        Ok(spec)
    }

    /// `B̃_1(s) + B_1(t − s)` with drift `t`: the constant of the Slepian-process Shepp tail.
    pub fn slepian() -> Self {
        Self::y1(1.0, 1.0, 1.0, 1.0, Drift::Power { b: 1.0, beta: 1.0 }).expect("valid")
    }

    /// `B̃_1(s/2) + B_1((t − s)/2)` with drift `t/2`: the constant of the Brownian-motion Shepp tail.
    pub fn fbm_shepp() -> Self {
        Self::y1(0.5, 0.5, 0.5, 1.0, Drift::Power { b: 0.5, beta: 1.0 }).expect("valid")
    }

    /// `B̃_α(c s) + B_α(c t − c s)` with `c = b2^{1/α}` and drift `b1 t^α`, for
    /// the Shepp statistic of a stationary process with equal exponents.
    pub fn shepp_stationary(b1: f64, b2: f64, alpha: f64) -> Result<Self> {
        let c = b2.powf(1.0 / alpha);
        Self::y1(c, c, c, alpha, Drift::Power { b: b1, beta: alpha })
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidSpec(msg));
        for (name, a) in [("a1", self.a1), ("a2", self.a2)] {
            if !(a > 0.0 && a.is_finite()) {
                return bad(format!("{name} = {a} must be positive"));
            }
        }
        if !self.a3.is_finite() {
            return bad(format!("a3 = {} must be finite", self.a3));
        }
        for (name, a) in [("alpha1", self.alpha1), ("alpha2", self.alpha2)] {
            if !(a > 0.0 && a <= 2.0) {
                return bad(format!("{name} = {a} outside (0,2]"));
            }
        }
        match self.variant {
            LimitVariant::Y1 if !exponent_eq(self.alpha1, self.alpha2) => {
                return bad(format!("Y1 needs alpha1 = alpha2, got {} and {}", self.alpha1, self.alpha2));
            }
            LimitVariant::Y2 if cmp_exponent(self.alpha1, self.alpha2).is_ge() => {
                return bad(format!("Y2 needs alpha1 < alpha2, got {} and {}", self.alpha1, self.alpha2));
            }
            _ => {}
        }
        if let Drift::Power { b, beta } = self.drift {
            if !(b > 0.0 && b.is_finite()) {
                return bad(format!("drift coefficient b = {b} must be positive"));
            }
            if !exponent_eq(beta, self.alpha2) {
                return bad(format!("drift exponent beta = {beta} must equal alpha2 = {}", self.alpha2));
            }
        }
        Ok(())
    }

    /// `a3` as it enters the field; zero for `Y2`.
    pub fn effective_a3(&self) -> f64 {
        match self.variant {
            LimitVariant::Y1 => self.a3,
            LimitVariant::Y2 => 0.0,
        }
    }

    /// `sup` over the rectangle splits into a sum of one-dimensional sups.
    pub fn is_separable(&self) -> bool {
        self.effective_a3() == 0.0
    }

    /// `Var Y(s,t)`.
    pub fn variance(&self, s: f64, t: f64) -> f64 {
        (self.a1 * s).abs().powf(self.alpha1) + (self.a2 * t - self.effective_a3() * s).abs().powf(self.alpha2)
    }
}

impl fmt::Display for LimitFieldSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let v = match self.variant {
            LimitVariant::Y1 => "Y1",
            LimitVariant::Y2 => "Y2",
        };
        write!(f, "{v}(a1={},a2={}", self.a1, self.a2)?;
        if self.variant == LimitVariant::Y1 {
            write!(f, ",a3={}", self.a3)?;
        }
        write!(f, ",alpha1={},alpha2={}", self.alpha1, self.alpha2)?;
        match self.drift {
            Drift::None => write!(f, ")"),
            Drift::Power { b, beta } => write!(f, ";b={b},beta={beta})"),
        }
    }
}

/// Largest denominator tried when expressing `a2/|a3|` as a fraction.
const MAX_DENOMINATOR: u64 = 64;

fn small_fraction(x: f64) -> Option<(u64, u64)> {
    (1..=MAX_DENOMINATOR).find_map(|q| {
        let p = (x * q as f64).round();
        (p >= 1.0 && (p / q as f64 - x).abs() <= 1e-9 * x).then_some((p as u64, q))
    })
}

/// Index ranges `lo..=hi` (in grid steps) of a sampled rectangle.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StepRange {
    pub lo: i64,
    pub hi: i64,
}

impl StepRange {
    pub fn new(lo: i64, hi: i64) -> Self {
        assert!(lo <= 0 && hi >= 0, "range must contain the origin");
        Self { lo, hi }
    }

    pub fn len(&self) -> usize {
        (self.hi - self.lo + 1) as usize
    }

    pub fn is_empty(&self) -> bool {
        false
    }
}

/// Samples the centered part `√2·Y − Var Y` of a limit field on the grid
/// `{(i·dt, j·dt)}`, keeping the two fBm components separately.
///
/// The component `B_{α2}(a2 t − a3 s)` is simulated on one fine grid of step
/// `h` with `a2·dt = p·h` and `|a3|·dt = q·h`, so every needed argument is an
/// exact grid node.
#[derive(Debug)]
pub struct LimitFieldSampler {
    spec: LimitFieldSpec,
    dt: f64,
    s: StepRange,
    t: StepRange,
    p: i64,
    q_signed: i64,
    k: StepRange,
    s_sim: PathSimulator,
    b_sim: PathSimulator,
    s_var: Vec<f64>,
    b_var: Vec<f64>,
    drift: Vec<f64>,
}

/// One draw of the two components, stored as `√2·B − Var` per node.
#[derive(Debug, Clone, Default)]
pub struct LimitFieldDraw {
    f: Vec<f64>,
    c: Vec<f64>,
    raw_s: Vec<f64>,
    raw_b: Vec<f64>,
}

impl LimitFieldSampler {
    pub fn new(spec: &LimitFieldSpec, dt: f64, s: StepRange, t: StepRange) -> Result<Self> {
        spec.validate()?;
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(Error::InvalidGrid(format!("step {dt} must be positive")));
        }
        let a3 = spec.effective_a3();
        let (p, q_signed, h) = if a3 == 0.0 {
            (1, 0, spec.a2 * dt)
        } else {
            let (p, q) = small_fraction(spec.a2 / a3.abs()).ok_or_else(|| {
                Error::InvalidSpec(format!(
                    "a2/|a3| = {} is not a ratio of integers with denominator ≤ {MAX_DENOMINATOR}",
                    spec.a2 / a3.abs()
                ))
            })?;
            (p as i64, q as i64 * a3.signum() as i64, spec.a2 * dt / p as f64)
        };
        let corners = [(s.lo, t.lo), (s.lo, t.hi), (s.hi, t.lo), (s.hi, t.hi)];
        let ks = corners.map(|(i, j)| p * j - q_signed * i);
        let k = StepRange::new(*ks.iter().min().unwrap(), *ks.iter().max().unwrap());

        if s.len() < 2 || t.len() < 2 {
            return Err(Error::InvalidGrid("limit-field rectangle needs at least one step in s and in t".into()));
        }
        let s_sim = PathSimulator::new(
            &CovarianceModel::Fbm { alpha: spec.alpha1 },
            Grid1D::new(s.len(), spec.a1 * dt, 0.0)?,
            SimOptions::default(),
        )?;
        let b_sim = PathSimulator::new(
            &CovarianceModel::Fbm { alpha: spec.alpha2 },
            Grid1D::new(k.len(), h, 0.0)?,
            SimOptions::default(),
        )?;
        let s_var = (s.lo..=s.hi).map(|i| (spec.a1 * i as f64 * dt).abs().powf(spec.alpha1)).collect();
        let b_var = (k.lo..=k.hi).map(|kk| (kk as f64 * h).abs().powf(spec.alpha2)).collect();
        let drift = (t.lo..=t.hi).map(|j| spec.drift.at(j as f64 * dt)).collect();
        Ok(Self { spec: *spec, dt, s, t, p, q_signed, k, s_sim, b_sim, s_var, b_var, drift })
    }

    pub fn spec(&self) -> &LimitFieldSpec {
        &self.spec
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn s_range(&self) -> StepRange {
        self.s
    }

    pub fn t_range(&self) -> StepRange {
        self.t
    }

    /// Number of nodes of the fine grid carrying the second component.
    pub fn fine_len(&self) -> usize {
        self.k.len()
    }

    pub fn sample_into<R: Rng + ?Sized>(&self, rng: &mut R, scratch: &mut Scratch, draw: &mut LimitFieldDraw) {
        let ns = self.s_sim.grid().len();
        let nb = self.b_sim.grid().len();
        draw.raw_s.resize(ns, 0.0);
        draw.raw_b.resize(nb, 0.0);
        self.s_sim.sample_into(rng, scratch, &mut draw.raw_s);
        self.b_sim.sample_into(rng, scratch, &mut draw.raw_b);
        recenter(&mut draw.raw_s, self.s, &mut draw.f, &self.s_var);
        recenter(&mut draw.raw_b, self.k, &mut draw.c, &self.b_var);
    }

    fn fine_index(&self, i: i64, j: i64) -> usize {
        (self.p * j - self.q_signed * i - self.k.lo) as usize
    }

    /// `sup` of `√2·Y − Var Y − drift` over the step rectangle `s × t`, which
    /// must lie inside the sampled one.
    pub fn sup(&self, draw: &LimitFieldDraw, s: StepRange, t: StepRange) -> f64 {
        assert!(s.lo >= self.s.lo && s.hi <= self.s.hi && t.lo >= self.t.lo && t.hi <= self.t.hi);
        let f = |i: i64| draw.f[(i - self.s.lo) as usize];
        let d = |j: i64| self.drift[(j - self.t.lo) as usize];
        if self.q_signed == 0 {
            let fs = (s.lo..=s.hi).map(f).fold(f64::NEG_INFINITY, f64::max);
            let gs = (t.lo..=t.hi).map(|j| draw.c[self.fine_index(0, j)] - d(j)).fold(f64::NEG_INFINITY, f64::max);
            return fs + gs;
        }
        let mut best = f64::NEG_INFINITY;
        let step = self.p as usize;
        for i in s.lo..=s.hi {
            let base = self.fine_index(i, t.lo);
            let drift = &self.drift[(t.lo - self.t.lo) as usize..=(t.hi - self.t.lo) as usize];
            let mut row = f64::NEG_INFINITY;
            for (n, dj) in drift.iter().enumerate() {
                row = row.max(draw.c[base + n * step] - dj);
            }
            best = best.max(f(i) + row);
        }
        best
    }

    /// `ln(dt·Σ_i exp(√2·Y(s_i,0) − Var Y(s_i,0)))` over the whole sampled `s` range.
    pub fn log_base_mass(&self, draw: &LimitFieldDraw) -> f64 {
        let vals: Vec<f64> =
            (self.s.lo..=self.s.hi).map(|i| draw.f[(i - self.s.lo) as usize] + draw.c[self.fine_index(i, 0)]).collect();
        let m = vals.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let sum: f64 = vals.iter().map(|v| (v - m).exp()).sum();
        m + (sum * self.dt).ln()
    }

    /// `Y(s,t)` on the sampled rectangle.
    pub fn field(&self, draw: &LimitFieldDraw) -> Result<FieldSample> {
        let sgrid = Grid1D::new(self.s.len(), self.dt, self.s.lo as f64 * self.dt)?;
        let tgrid = Grid1D::new(self.t.len(), self.dt, self.t.lo as f64 * self.dt)?;
        let mut values = Vec::with_capacity(sgrid.len() * tgrid.len());
        for i in self.s.lo..=self.s.hi {
            let ii = (i - self.s.lo) as usize;
            for j in self.t.lo..=self.t.hi {
                let kk = self.fine_index(i, j);
                values.push((draw.f[ii] + self.s_var[ii] + draw.c[kk] + self.b_var[kk]) / SQRT_2);
            }
        }
        FieldSample::new(sgrid, tgrid, values)
    }
}

/// Turns a one-sided fBm path `W` into two-sided values `W(k − lo) − W(−lo)`
/// for `k ∈ range`, then into `√2·B − Var B`.
fn recenter(raw: &mut [f64], range: StepRange, out: &mut Vec<f64>, var: &[f64]) {
    let n = range.len();
    let zero = raw[(-range.lo) as usize];
    out.clear();
    out.extend(raw[..n].iter().zip(var).map(|(w, v)| SQRT_2 * (w - zero) - v));
}
