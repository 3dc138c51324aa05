use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::covariance::{fgn_acov, CovarianceModel};
use super::engine::{CholeskyGenerator, CirculantGenerator, Scratch, CHOLESKY_JITTER};
use super::grid::Grid1D;
use crate::error::{Error, Result};
use crate::mc::{replicate_chunks, substream};
use crate::params::exponent_eq;

/// Discretized sample path.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SamplePath {
    pub grid: Grid1D,
    pub values: Vec<f64>,
}

impl SamplePath {
    pub fn new(grid: Grid1D, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::GridMismatch(format!("{} values for a {}-point grid", values.len(), grid.len())));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidModel(format!("non-finite value at index {i}")));
        }
        Ok(Self { grid, values })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    /// Circulant embedding, Cholesky fallback; Brownian motion by independent increments.
    #[default]
    Auto,
    Circulant,
    Cholesky,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimOptions {
    pub method: Method,
    /// Fall back to jittered dense Cholesky when circulant embedding fails.
    pub cholesky_fallback: bool,
}

impl Default for SimOptions {
    fn default() -> Self {
        Self { method: Method::Auto, cholesky_fallback: true }
    }
}

#[derive(Debug)]
enum Engine {
    /// Brownian motion from 0 via independent increments of the given sd.
    Increments {
        sd: f64,
    },
    /// fBm from 0 as cumulative sums of circulant-sampled fractional Gaussian noise.
    FgnCirculant(CirculantGenerator),
    /// fBm values at grid points 1..n from a factorized covariance.
    FbmCholesky(CholeskyGenerator),
    StationaryCirculant(CirculantGenerator),
    StationaryCholesky(CholeskyGenerator),
    /// Brownian bridge via `B(s) − s·B(1)`; `times` ends with 1.
    Bridge {
        times: Vec<f64>,
        grid_len: usize,
    },
}

/// Sampler for one (model, grid) pair; setup is done once, sampling is cheap.
#[derive(Debug)]
pub struct PathSimulator {
    grid: Grid1D,
    engine: Engine,
}

impl PathSimulator {
    pub fn new(model: &CovarianceModel, grid: Grid1D, opts: SimOptions) -> Result<Self> {
        model.validate()?;
        let engine = match model {
            CovarianceModel::Fbm { alpha } => fbm_engine(*alpha, grid, opts)?,
            CovarianceModel::BrownianBridge => bridge_engine(grid)?,
            stationary => {
                let dt = grid.dt();
                let acov = |tau: f64| stationary.autocovariance(tau).expect("stationary kind");
                let n = grid.len();
                let cholesky = || {
                    CholeskyGenerator::new(
                        n,
                        |i, j| acov(i.abs_diff(j) as f64 * dt),
                        if opts.method == Method::Cholesky { 0.0 } else { CHOLESKY_JITTER },
                    )
                };
                match opts.method {
                    Method::Cholesky => Engine::StationaryCholesky(cholesky()?),
                    _ => match CirculantGenerator::new(n, |k| acov(k as f64 * dt)) {
                        Ok(g) => Engine::StationaryCirculant(g),
                        Err(e) if opts.cholesky_fallback => {
                            log::warn!("{}: {e}; falling back to Cholesky", stationary.name());
                            Engine::StationaryCholesky(cholesky()?)
                        }
                        Err(e) => return Err(e),
                    },
                }
            }
        };
        Ok(Self { grid, engine })
    }

    pub fn grid(&self) -> Grid1D {
        self.grid
    }

    /// Writes one path (length `grid.len()`) into `out`.
    pub fn sample_into<R: Rng + ?Sized>(&self, rng: &mut R, scratch: &mut Scratch, out: &mut [f64]) {
        debug_assert_eq!(out.len(), self.grid.len());
        match &self.engine {
            Engine::Increments { sd } => {
                out[0] = 0.0;
                let mut acc = 0.0;
                for x in out[1..].iter_mut() {
                    acc += sd * rng.sample::<f64, _>(StandardNormal);
                    *x = acc;
                }
            }
            Engine::FgnCirculant(g) => {
                out[0] = 0.0;
                g.sample(rng, scratch, &mut out[1..]);
                cumulate(&mut out[1..]);
            }
            Engine::FbmCholesky(g) => {
                out[0] = 0.0;
                g.sample(rng, scratch, &mut out[1..]);
            }
            Engine::StationaryCirculant(g) => g.sample(rng, scratch, out),
            Engine::StationaryCholesky(g) => g.sample(rng, scratch, out),
            Engine::Bridge { times, grid_len } => sample_bridge(rng, times, &mut out[..*grid_len]),
        }
    }

    /// Writes two independent paths. Circulant engines get both from one FFT.
    pub fn sample_pair_into<R: Rng + ?Sized>(&self, rng: &mut R, scratch: &mut Scratch, a: &mut [f64], b: &mut [f64]) {
        match &self.engine {
            Engine::FgnCirculant(g) => {
                a[0] = 0.0;
                b[0] = 0.0;
                g.sample_pair(rng, scratch, &mut a[1..], &mut b[1..]);
                cumulate(&mut a[1..]);
                cumulate(&mut b[1..]);
            }
            Engine::StationaryCirculant(g) => g.sample_pair(rng, scratch, a, b),
            _ => {
                self.sample_into(rng, scratch, a);
                self.sample_into(rng, scratch, b);
            }
        }
    }

    /// `f` applied to `reps` independent paths, in replication order.
    ///
    /// Deterministic in `seed` regardless of the number of worker threads.
    pub fn map_paths<T, F>(&self, reps: usize, seed: u64, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(&[f64]) -> T + Sync,
    {
        let n = self.grid.len();
        replicate_chunks(
            seed,
            reps,
            || (Scratch::default(), vec![0.0; n], vec![0.0; n]),
            |rng, (scratch, a, b), len| {
                let mut out = Vec::with_capacity(len);
                while out.len() < len {
                    self.sample_pair_into(rng, scratch, a, b);
                    out.push(f(a));
                    if out.len() < len {
                        out.push(f(b));
                    }
                }
                out
            },
        )
        .into_iter()
        .flatten()
        .collect()
    }

    /// One path drawn from stream 0 of `seed`.
    pub fn sample(&self, seed: u64) -> SamplePath {
        let mut rng = substream(seed, 0);
        let mut values = vec![0.0; self.grid.len()];
        self.sample_into(&mut rng, &mut Scratch::default(), &mut values);
        SamplePath { grid: self.grid, values }
    }
}

fn cumulate(xs: &mut [f64]) {
    let mut acc = 0.0;
    for x in xs {
        acc += *x;
        *x = acc;
    }
}

fn fbm_engine(alpha: f64, grid: Grid1D, opts: SimOptions) -> Result<Engine> {
    if grid.origin() != 0.0 {
        return Err(Error::InvalidGrid(format!("fbm grid must start at 0, got {}", grid.origin())));
    }
    let dt = grid.dt();
    let steps = grid.len() - 1;
    let cholesky = |jitter: f64| {
        CholeskyGenerator::new(
            steps,
            |i, j| super::covariance::fbm_cov(alpha, grid.point(i + 1), grid.point(j + 1)),
            jitter,
        )
        .map(Engine::FbmCholesky)
    };
    match opts.method {
        Method::Auto if exponent_eq(alpha, 1.0) => Ok(Engine::Increments { sd: dt.sqrt() }),
        Method::Cholesky => cholesky(0.0),
        _ => match CirculantGenerator::new(steps, |k| fgn_acov(alpha, dt, k)) {
            Ok(g) => Ok(Engine::FgnCirculant(g)),
            Err(e) if opts.cholesky_fallback => {
                log::warn!("fbm(α={alpha}): {e}; falling back to Cholesky");
                cholesky(CHOLESKY_JITTER)
            }
            Err(e) => Err(e),
        },
    }
}

const BRIDGE_TOL: f64 = 1e-9;

fn bridge_engine(grid: Grid1D) -> Result<Engine> {
    if grid.origin() < -BRIDGE_TOL || grid.end() > 1.0 + BRIDGE_TOL {
        return Err(Error::InvalidGrid(format!("bridge grid [{}, {}] is not inside [0,1]", grid.origin(), grid.end())));
    }
    let mut times: Vec<f64> = grid.points().map(|t| t.clamp(0.0, 1.0)).collect();
    let last = times.len() - 1;
    if (times[last] - 1.0).abs() <= BRIDGE_TOL {
        times[last] = 1.0;
    } else {
        times.push(1.0);
    }
    if times[0].abs() <= BRIDGE_TOL {
        times[0] = 0.0;
    }
    Ok(Engine::Bridge { times, grid_len: grid.len() })
}

fn sample_bridge<R: Rng + ?Sized>(rng: &mut R, times: &[f64], out: &mut [f64]) {
    let mut prev_t = 0.0;
    let mut b = 0.0;
    let mut b_one = 0.0;
    for (k, &t) in times.iter().enumerate() {
        b += (t - prev_t).sqrt() * rng.sample::<f64, _>(StandardNormal);
        prev_t = t;
        if k < out.len() {
            out[k] = b;
        }
        b_one = b;
    }
    for (x, &t) in out.iter_mut().zip(times) {
        *x -= t * b_one;
    }
}

/// Standard fBm with exponent `alpha` on a grid starting at 0.
pub fn simulate_fbm(alpha: f64, grid: Grid1D, seed: u64) -> Result<SamplePath> {
    simulate_fbm_with(alpha, grid, seed, SimOptions::default())
}

pub fn simulate_fbm_with(alpha: f64, grid: Grid1D, seed: u64, opts: SimOptions) -> Result<SamplePath> {
    Ok(PathSimulator::new(&CovarianceModel::Fbm { alpha }, grid, opts)?.sample(seed))
}

/// Centered stationary process (stationary, Slepian or Ornstein–Uhlenbeck model).
pub fn simulate_stationary(model: &CovarianceModel, grid: Grid1D, seed: u64) -> Result<SamplePath> {
    simulate_stationary_with(model, grid, seed, SimOptions::default())
}

pub fn simulate_stationary_with(
    model: &CovarianceModel,
    grid: Grid1D,
    seed: u64,
    opts: SimOptions,
) -> Result<SamplePath> {
    if !model.is_stationary() {
        return Err(Error::InvalidModel(format!("{} is not stationary", model.name())));
    }
    Ok(PathSimulator::new(model, grid, opts)?.sample(seed))
}

/// Brownian bridge on a grid inside `[0,1]`.
pub fn simulate_brownian_bridge(grid: Grid1D, seed: u64) -> Result<SamplePath> {
    Ok(PathSimulator::new(&CovarianceModel::BrownianBridge, grid, SimOptions::default())?.sample(seed))
}
