//! Exact Gaussian vector samplers: circulant embedding and dense Cholesky.

use std::sync::Arc;

use rand::Rng;
use rand_distr::StandardNormal;
use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};

/// Relative size of a negative circulant eigenvalue that is still clamped to zero.
pub const EIGEN_CLAMP_REL: f64 = 1e-10;

/// Relative diagonal jitter added before a fallback Cholesky factorization.
pub const CHOLESKY_JITTER: f64 = 1e-12;

/// Work buffers reused across samples.
#[derive(Default)]
pub struct Scratch {
    buf: Vec<Complex64>,
    fft: Vec<Complex64>,
    normals: Vec<f64>,
}

/// Samples `n` consecutive values of a stationary sequence with autocovariance
/// `γ(k)` by embedding it in a circulant matrix of power-of-two size `m ≥ 2(n−1)`.
///
/// One FFT yields two independent samples (real and imaginary parts).
pub struct CirculantGenerator {
    n: usize,
    m: usize,
    sqrt_eig: Vec<f64>,
    fft: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for CirculantGenerator {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("CirculantGenerator").field("n", &self.n).field("m", &self.m).finish()
    }
}

impl CirculantGenerator {
    /// `acov(k)` is queried for `k = 0..=m/2`.
    pub fn new(n: usize, acov: impl Fn(usize) -> f64) -> Result<Self> {
        assert!(n >= 1);
        let m = (2 * n.saturating_sub(1)).max(2).next_power_of_two();
        let half = m / 2;
        let gamma: Vec<f64> = (0..=half).map(&acov).collect();
        let mut buf: Vec<Complex64> = (0..m).map(|j| Complex64::new(gamma[j.min(m - j)], 0.0)).collect();
        let mut planner = FftPlanner::new();
        let fft = planner.plan_fft_forward(m);
        fft.process(&mut buf);
        let eig: Vec<f64> = buf.iter().map(|c| c.re).collect();
        let max = eig.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let min = eig.iter().cloned().fold(f64::INFINITY, f64::min);
        if !(max > 0.0) || min < -EIGEN_CLAMP_REL * max {
            return Err(Error::EmbeddingFailed { min_eigenvalue: min, max_eigenvalue: max });
        }
        if min < 0.0 {
            if min < -1e-13 * max {
                log::warn!("circulant embedding (m = {m}): clamping eigenvalues down to {min:e} (max {max:e})");
            } else {
                log::debug!("circulant embedding (m = {m}): clamping round-off eigenvalue {min:e}");
            }
        }
        let scale = 1.0 / m as f64;
        let sqrt_eig = eig.iter().map(|&l| (l.max(0.0) * scale).sqrt()).collect();
        Ok(Self { n, m, sqrt_eig, fft })
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn embedding_size(&self) -> usize {
        self.m
    }

    /// Fills `a` and `b` (each of length `n`) with two independent samples.
    pub fn sample_pair<R: Rng + ?Sized>(&self, rng: &mut R, scratch: &mut Scratch, a: &mut [f64], b: &mut [f64]) {
        self.transform(rng, scratch);
        for (i, c) in scratch.buf[..self.n].iter().enumerate() {
            a[i] = c.re;
            b[i] = c.im;
        }
    }

    /// Fills `a` with one sample.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R, scratch: &mut Scratch, a: &mut [f64]) {
        self.transform(rng, scratch);
        for (x, c) in a.iter_mut().zip(&scratch.buf[..self.n]) {
            *x = c.re;
        }
    }

    fn transform<R: Rng + ?Sized>(&self, rng: &mut R, scratch: &mut Scratch) {
        scratch.buf.clear();
        scratch.buf.extend(self.sqrt_eig.iter().map(|&s| {
            let re: f64 = rng.sample(StandardNormal);
            let im: f64 = rng.sample(StandardNormal);
            Complex64::new(s * re, s * im)
        }));
        let need = self.fft.get_inplace_scratch_len();
        if scratch.fft.len() < need {
            scratch.fft.resize(need, Complex64::default());
        }
        self.fft.process_with_scratch(&mut scratch.buf, &mut scratch.fft[..need]);
    }
}

/// Samples `N(0, Σ)` as `L·z` with `Σ = L Lᵀ`.
#[derive(Debug, Clone)]
pub struct CholeskyGenerator {
    n: usize,
    lower: Vec<f64>,
}

impl CholeskyGenerator {
    /// Factorizes the `n×n` matrix `cov(i, j)`, adding `jitter × max diagonal`
    /// to the diagonal first.
    pub fn new(n: usize, cov: impl Fn(usize, usize) -> f64, jitter: f64) -> Result<Self> {
        let mut a = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..=i {
                a[i * n + j] = cov(i, j);
            }
        }
        let max_diag = (0..n).map(|i| a[i * n + i]).fold(0.0, f64::max);
        for i in 0..n {
            a[i * n + i] += jitter * max_diag;
        }
        for j in 0..n {
            let mut d = a[j * n + j];
            for k in 0..j {
                d -= a[j * n + k] * a[j * n + k];
            }
            if !(d > 0.0) {
                return Err(Error::NotPositiveDefinite { pivot: j, value: d });
            }
            let d = d.sqrt();
            a[j * n + j] = d;
            for i in j + 1..n {
                let mut v = a[i * n + j];
                for k in 0..j {
                    v -= a[i * n + k] * a[j * n + k];
                }
                a[i * n + j] = v / d;
            }
        }
        for i in 0..n {
            for j in i + 1..n {
                a[i * n + j] = 0.0;
            }
        }
        Ok(Self { n, lower: a })
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R, scratch: &mut Scratch, out: &mut [f64]) {
        let n = self.n;
        scratch.normals.clear();
        scratch.normals.extend((0..n).map(|_| rng.sample::<f64, _>(StandardNormal)));
        for (i, o) in out.iter_mut().enumerate().take(n) {
            let row = &self.lower[i * n..i * n + i + 1];
            *o = row.iter().zip(&scratch.normals).map(|(l, z)| l * z).sum();
        }
    }
}
