use std::f64::consts::SQRT_2;

use serde::{Deserialize, Serialize};

use super::limit_field::{LimitFieldDraw, LimitFieldSampler, LimitFieldSpec, StepRange};
use super::{ConstantEstimate, ConstantKind, ConstantSource, Estimator};
use crate::error::{Error, Result};
use crate::mc::{batch_mean_se, replicate};
use crate::sim::{CovarianceModel, Grid1D, PathSimulator, Scratch, SimOptions};

/// Horizons, grid and sample size for one Monte Carlo constant estimate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McSettings {
    pub horizon_s: f64,
    pub horizon_t: f64,
    pub grid_dt: f64,
    pub replications: usize,
    pub seed: u64,
    pub estimator: Estimator,
}

impl Default for McSettings {
    fn default() -> Self {
        Self {
            horizon_s: 8.0,
            horizon_t: 8.0,
            grid_dt: 1.0 / 1024.0,
            replications: 100_000,
            seed: 0,
            estimator: Estimator::SupOverIntegral,
        }
    }
}

/// Mean of an unnormalized functional `E exp(sup …)` at one horizon.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FunctionalEstimate {
    pub horizon_s: Option<f64>,
    pub horizon_t: f64,
    pub mean: f64,
    pub std_error: f64,
}

fn whole_steps(horizon: f64, dt: f64, what: &str) -> Result<usize> {
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::InvalidMonteCarlo(format!("grid step {dt} must be positive")));
    }
    if !(horizon > 0.0 && horizon.is_finite()) {
        return Err(Error::InvalidMonteCarlo(format!("{what} {horizon} must be positive")));
    }
    let k = horizon / dt;
    let r = k.round();
    if r < 1.0 || (k - r).abs() > 1e-9 * r {
        return Err(Error::InvalidMonteCarlo(format!("{what} {horizon} is not a whole number of steps {dt}")));
    }
    Ok(r as usize)
}

fn check_common(alpha: f64, reps: usize) -> Result<()> {
    if !(alpha > 0.0 && alpha <= 2.0) {
        return Err(Error::InvalidMonteCarlo(format!("alpha = {alpha} outside (0,2]")));
    }
    if reps == 0 {
        return Err(Error::InvalidMonteCarlo("need at least one replication".into()));
    }
    Ok(())
}

fn fbm_simulator(alpha: f64, steps: usize, dt: f64) -> Result<PathSimulator> {
    PathSimulator::new(&CovarianceModel::Fbm { alpha }, Grid1D::new(steps + 1, dt, 0.0)?, SimOptions::default())
}

/// One value per replication, in replication order. Paths are drawn in
/// independent pairs so circulant engines need one FFT per two paths.
fn powers(alpha: f64, dt: f64, n: usize) -> Vec<f64> {
    (0..=n).map(|m| (m as f64 * dt).powf(alpha)).collect()
}

/// `max_i √2·(x_i − x_c) − coef·|t_i − t_c|^α` around centre index `c`.
fn centred_drifted_max(x: &[f64], c: usize, coef: f64, pw: &[f64]) -> f64 {
    let x0 = x[c];
    x.iter().enumerate().map(|(i, v)| SQRT_2 * (v - x0) - coef * pw[i.abs_diff(c)]).fold(f64::NEG_INFINITY, f64::max)
}

#[allow(clippy::too_many_arguments)]
fn mc_estimate(
    kind: ConstantKind,
    values: &[f64],
    horizon_s: Option<f64>,
    horizon_t: f64,
    dt: f64,
    seed: u64,
    estimator: Option<Estimator>,
) -> ConstantEstimate {
    let (value, std_error) = batch_mean_se(values);
    ConstantEstimate {
        kind,
        value,
        std_error,
        source: ConstantSource::MonteCarlo,
        horizon_t: Some(horizon_t),
        horizon_s,
        grid_dt: Some(dt),
        replications: Some(values.len() as u64),
        seed: Some(seed),
        estimator,
    }
}

/// Monte Carlo `𝓗_α` with the default estimator.
pub fn estimate_pickands(
    alpha: f64,
    horizon_t: f64,
    grid_dt: f64,
    replications: usize,
    seed: u64,
) -> Result<ConstantEstimate> {
    estimate_pickands_with(alpha, horizon_t, grid_dt, replications, seed, Estimator::default())
}

/// Monte Carlo `𝓗_α` on the grid `dt·ℤ`.
///
/// With [`Estimator::SupOverIntegral`] each path of `Z(t) = √2·B_α(t) − |t|^α`
/// on `[−T, T]` contributes `max e^Z / (dt·Σ e^Z)`; with
/// [`Estimator::TruncatedAverage`] it contributes `exp(max_{[0,T]} Z) / T`.
pub fn estimate_pickands_with(
    alpha: f64,
    horizon_t: f64,
    grid_dt: f64,
    replications: usize,
    seed: u64,
    estimator: Estimator,
) -> Result<ConstantEstimate> {
    check_common(alpha, replications)?;
    let n = whole_steps(horizon_t, grid_dt, "horizon T")?;
    let pw = powers(alpha, grid_dt, n);
    let kind = ConstantKind::Pickands { alpha };
    let values = match estimator {
        Estimator::SupOverIntegral => {
            let sim = fbm_simulator(alpha, 2 * n, grid_dt)?;
            sim.map_paths(replications, seed, |x| {
                let x0 = x[n];
                let z: Vec<f64> = x.iter().enumerate().map(|(i, v)| SQRT_2 * (v - x0) - pw[i.abs_diff(n)]).collect();
                let m = z.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                let mass: f64 = z.iter().map(|v| (v - m).exp()).sum();
                1.0 / (grid_dt * mass)
            })
        }
        Estimator::TruncatedAverage => {
            let sim = fbm_simulator(alpha, n, grid_dt)?;
            let len = n as f64 * grid_dt;
            sim.map_paths(replications, seed, |x| centred_drifted_max(x, 0, 1.0, &pw).exp() / len)
        }
    };
    Ok(mc_estimate(kind, &values, None, n as f64 * grid_dt, grid_dt, seed, Some(estimator)))
}

/// `𝓗_α[0,T] = E exp(sup_{[0,T]} √2·B_α(t) − t^α)` at each horizon, all from
/// the same paths (so the estimates are nondecreasing in `T`).
pub fn pickands_functional(
    alpha: f64,
    horizons: &[f64],
    grid_dt: f64,
    replications: usize,
    seed: u64,
) -> Result<Vec<FunctionalEstimate>> {
    check_common(alpha, replications)?;
    if horizons.is_empty() {
        return Err(Error::InvalidMonteCarlo("no horizons given".into()));
    }
    let steps: Vec<usize> = horizons.iter().map(|&h| whole_steps(h, grid_dt, "horizon T")).collect::<Result<_>>()?;
    let n = *steps.iter().max().unwrap();
    let pw = powers(alpha, grid_dt, n);
    let sim = fbm_simulator(alpha, n, grid_dt)?;
    let rows = replicate(
        seed,
        replications,
        || (Scratch::default(), vec![0.0; n + 1]),
        |rng, (scratch, x)| {
            sim.sample_into(rng, scratch, x);
            let mut running = Vec::with_capacity(n + 1);
            let mut m = f64::NEG_INFINITY;
            for (i, v) in x.iter().enumerate() {
                m = m.max(SQRT_2 * v - pw[i]);
                running.push(m);
            }
            steps.iter().map(|&k| running[k].exp()).collect::<Vec<f64>>()
        },
    );
    Ok(steps
        .iter()
        .enumerate()
        .map(|(h, &k)| {
            let col: Vec<f64> = rows.iter().map(|r| r[h]).collect();
            let (mean, std_error) = batch_mean_se(&col);
            FunctionalEstimate { horizon_s: None, horizon_t: k as f64 * grid_dt, mean, std_error }
        })
        .collect())
}

/// Monte Carlo `𝒫_α^b[0,T]`, or `𝒫̃_α^b[−T,T]` when `two_sided`. No normalization.
pub fn estimate_piterbarg(
    alpha: f64,
    b: f64,
    horizon_t: f64,
    grid_dt: f64,
    replications: usize,
    seed: u64,
    two_sided: bool,
) -> Result<ConstantEstimate> {
    check_common(alpha, replications)?;
    if !(b > 0.0 && b.is_finite()) {
        return Err(Error::InvalidMonteCarlo(format!("b = {b} must be positive")));
    }
    let n = whole_steps(horizon_t, grid_dt, "horizon T")?;
    let pw = powers(alpha, grid_dt, n);
    let coef = 1.0 + b;
    let (kind, values) = if two_sided {
        let sim = fbm_simulator(alpha, 2 * n, grid_dt)?;
        let v = sim.map_paths(replications, seed, |x| centred_drifted_max(x, n, coef, &pw).exp());
        (ConstantKind::PiterbargTwoSided { alpha, b }, v)
    } else {
        let sim = fbm_simulator(alpha, n, grid_dt)?;
        let v = sim.map_paths(replications, seed, |x| centred_drifted_max(x, 0, coef, &pw).exp());
        (ConstantKind::Piterbarg { alpha, b }, v)
    };
    Ok(mc_estimate(kind, &values, None, n as f64 * grid_dt, grid_dt, seed, None))
}

/// Monte Carlo `𝓜` (or `𝓜̃` when `two_sided_t`) with the default estimator.
pub fn estimate_generalized(
    spec: &LimitFieldSpec,
    horizon_s: f64,
    horizon_t: f64,
    grid_dt: f64,
    replications: usize,
    seed: u64,
    two_sided_t: bool,
) -> Result<ConstantEstimate> {
    let settings = McSettings { horizon_s, horizon_t, grid_dt, replications, seed, estimator: Estimator::default() };
    estimate_generalized_with(spec, &settings, two_sided_t)
}

/// Monte Carlo `𝓜` on the grid `dt·ℤ²`, `t` restricted to `[0,T]` (or `[−T,T]`).
pub fn estimate_generalized_with(
    spec: &LimitFieldSpec,
    settings: &McSettings,
    two_sided_t: bool,
) -> Result<ConstantEstimate> {
    spec.validate()?;
    if settings.replications == 0 {
        return Err(Error::InvalidMonteCarlo("need at least one replication".into()));
    }
    let dt = settings.grid_dt;
    let ns = whole_steps(settings.horizon_s, dt, "horizon S")? as i64;
    let nt = whole_steps(settings.horizon_t, dt, "horizon T")? as i64;
    let s = match settings.estimator {
        Estimator::SupOverIntegral => StepRange::new(-ns, ns),
        Estimator::TruncatedAverage => StepRange::new(0, ns),
    };
    let t = if two_sided_t { StepRange::new(-nt, nt) } else { StepRange::new(0, nt) };
    let sampler = LimitFieldSampler::new(spec, dt, s, t)?;
    let len_s = ns as f64 * dt;
    let values = replicate(
        settings.seed,
        settings.replications,
        || (Scratch::default(), LimitFieldDraw::default()),
        |rng, (scratch, draw)| {
            sampler.sample_into(rng, scratch, draw);
            let sup = sampler.sup(draw, s, t);
            match settings.estimator {
                Estimator::SupOverIntegral => (sup - sampler.log_base_mass(draw)).exp(),
                Estimator::TruncatedAverage => sup.exp() / len_s,
            }
        },
    );
    let kind = if two_sided_t {
        ConstantKind::GeneralizedTwoSided { spec: *spec }
    } else {
        ConstantKind::Generalized { spec: *spec }
    };
    Ok(mc_estimate(kind, &values, Some(len_s), nt as f64 * dt, dt, settings.seed, Some(settings.estimator)))
}

/// `𝓗_Y[S,T] = E exp(sup_{[0,S]×[0,T]} √2·Y − Var Y − drift)` at each `(S, T)`,
/// all from the same draws.
pub fn generalized_functional(
    spec: &LimitFieldSpec,
    horizons: &[(f64, f64)],
    grid_dt: f64,
    replications: usize,
    seed: u64,
    two_sided_t: bool,
) -> Result<Vec<FunctionalEstimate>> {
    spec.validate()?;
    if horizons.is_empty() || replications == 0 {
        return Err(Error::InvalidMonteCarlo("need at least one horizon and one replication".into()));
    }
    let steps: Vec<(i64, i64)> = horizons
        .iter()
        .map(|&(s, t)| Ok((whole_steps(s, grid_dt, "horizon S")? as i64, whole_steps(t, grid_dt, "horizon T")? as i64)))
        .collect::<Result<_>>()?;
    let ns = steps.iter().map(|p| p.0).max().unwrap();
    let nt = steps.iter().map(|p| p.1).max().unwrap();
    let t_range = |k: i64| if two_sided_t { StepRange::new(-k, k) } else { StepRange::new(0, k) };
    let sampler = LimitFieldSampler::new(spec, grid_dt, StepRange::new(0, ns), t_range(nt))?;
    let rows = replicate(
        seed,
        replications,
        || (Scratch::default(), LimitFieldDraw::default()),
        |rng, (scratch, draw)| {
            sampler.sample_into(rng, scratch, draw);
            steps.iter().map(|&(i, j)| sampler.sup(draw, StepRange::new(0, i), t_range(j)).exp()).collect::<Vec<f64>>()
        },
    );
    Ok(steps
        .iter()
        .enumerate()
        .map(|(h, &(i, j))| {
            let col: Vec<f64> = rows.iter().map(|r| r[h]).collect();
            let (mean, std_error) = batch_mean_se(&col);
            FunctionalEstimate { horizon_s: Some(i as f64 * grid_dt), horizon_t: j as f64 * grid_dt, mean, std_error }
        })
        .collect())
}

/// Estimates any constant kind with the given settings.
pub fn estimate(kind: &ConstantKind, settings: &McSettings) -> Result<ConstantEstimate> {
    let McSettings { horizon_t, grid_dt, replications, seed, estimator, .. } = *settings;
    match *kind {
        ConstantKind::Pickands { alpha } => {
            estimate_pickands_with(alpha, horizon_t, grid_dt, replications, seed, estimator)
        }
        ConstantKind::Piterbarg { alpha, b } => {
            estimate_piterbarg(alpha, b, horizon_t, grid_dt, replications, seed, false)
        }
        ConstantKind::PiterbargTwoSided { alpha, b } => {
            estimate_piterbarg(alpha, b, horizon_t, grid_dt, replications, seed, true)
        }
        ConstantKind::Generalized { spec } => estimate_generalized_with(&spec, settings, false),
        ConstantKind::GeneralizedTwoSided { spec } => estimate_generalized_with(&spec, settings, true),
    }
}

/// The same constant at half the horizons and, optionally, half the grid step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceReport {
    pub full: ConstantEstimate,
    pub half_horizon: ConstantEstimate,
    /// `(full − half_horizon)/full`.
    pub horizon_change: f64,
    pub half_step: Option<ConstantEstimate>,
    /// `(half_step − full)/full`.
    pub step_change: Option<f64>,
}

pub fn convergence_report(kind: &ConstantKind, settings: &McSettings, refine_step: bool) -> Result<ConvergenceReport> {
    let full = estimate(kind, settings)?;
    let halved = McSettings { horizon_s: settings.horizon_s / 2.0, horizon_t: settings.horizon_t / 2.0, ..*settings };
    let half_horizon = estimate(kind, &halved)?;
    let half_step = if refine_step {
        Some(estimate(kind, &McSettings { grid_dt: settings.grid_dt / 2.0, ..*settings })?)
    } else {
        None
    };
    let rel = |x: f64| (x - full.value) / full.value;
    Ok(ConvergenceReport {
        horizon_change: -rel(half_horizon.value),
        step_change: half_step.as_ref().map(|e| rel(e.value)),
        full,
        half_horizon,
        half_step,
    })
}
