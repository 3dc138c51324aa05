//! Reproducible parallel replication and the small statistics used on its output.
//!
//! Replications are grouped in fixed-size chunks; chunk `c` draws from ChaCha8
//! stream `c` of the master seed. Work is scheduled per chunk and results are
//! gathered in chunk order, so output does not depend on the number of workers.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

/// Replications sharing one random stream.
pub const CHUNK_LEN: usize = 64;

/// Number of batches used for Monte Carlo standard errors.
pub const SE_BATCHES: usize = 50;

/// Two-sided 95% normal quantile.
pub const Z95: f64 = 1.959_963_984_540_054;

/// Independent random stream `index` derived from `seed`.
pub fn substream(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// Runs `reps` replications in chunks of [`CHUNK_LEN`] and returns one
/// accumulator per chunk, in chunk order.
///
/// `init` builds per-worker scratch space; `chunk` receives the chunk's random
/// stream, the scratch space and the number of replications in the chunk.
pub fn replicate_chunks<A, S, I, F>(seed: u64, reps: usize, init: I, chunk: F) -> Vec<A>
where
    A: Send,
    I: Fn() -> S + Sync + Send,
    F: Fn(&mut ChaCha8Rng, &mut S, usize) -> A + Sync + Send,
{
    let n_chunks = reps.div_ceil(CHUNK_LEN);
    (0..n_chunks)
        .into_par_iter()
        .map_init(init, |scratch, c| {
            let len = CHUNK_LEN.min(reps - c * CHUNK_LEN);
            let mut rng = substream(seed, c as u64);
            chunk(&mut rng, scratch, len)
        })
        .collect()
}

/// Runs `reps` replications and returns their values in replication order.
pub fn replicate<T, S, I, F>(seed: u64, reps: usize, init: I, one: F) -> Vec<T>
where
    T: Send,
    I: Fn() -> S + Sync + Send,
    F: Fn(&mut ChaCha8Rng, &mut S) -> T + Sync + Send,
{
    replicate_chunks(seed, reps, init, |rng, scratch, len| (0..len).map(|_| one(rng, scratch)).collect::<Vec<T>>())
        .into_iter()
        .flatten()
        .collect()
}

/// Sum with a fixed pairwise reduction tree.
pub fn pairwise_sum(xs: &[f64]) -> f64 {
    if xs.len() <= 16 {
        return xs.iter().sum();
    }
    let mid = xs.len() / 2;
    pairwise_sum(&xs[..mid]) + pairwise_sum(&xs[mid..])
}

pub fn mean(xs: &[f64]) -> f64 {
    pairwise_sum(xs) / xs.len() as f64
}

/// Mean and its standard error from [`SE_BATCHES`] near-equal consecutive batches.
///
/// Falls back to the plain sample standard deviation when there are fewer
/// than two replications per batch.
pub fn batch_mean_se(xs: &[f64]) -> (f64, f64) {
    let n = xs.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let m = mean(xs);
    if n == 1 {
        return (m, 0.0);
    }
    if n < 2 * SE_BATCHES {
        let sq: Vec<f64> = xs.iter().map(|x| (x - m) * (x - m)).collect();
        let var = pairwise_sum(&sq) / (n - 1) as f64;
        return (m, (var / n as f64).sqrt());
    }
    let k = SE_BATCHES;
    let batch_means: Vec<f64> = (0..k).map(|b| mean(&xs[b * n / k..(b + 1) * n / k])).collect();
    let bm = mean(&batch_means);
    let ss: f64 = batch_means.iter().map(|x| (x - bm) * (x - bm)).sum();
    (m, (ss / ((k - 1) * k) as f64).sqrt())
}

/// Wilson score interval for `successes` out of `trials` at normal quantile `z`.
pub fn wilson_interval(successes: u64, trials: u64, z: f64) -> (f64, f64) {
    if trials == 0 {
        return (0.0, 1.0);
    }
    let n = trials as f64;
    let p = successes as f64 / n;
    let z2 = z * z;
    let denom = 1.0 + z2 / n;
    let centre = (p + z2 / (2.0 * n)) / denom;
    let half = z * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt() / denom;
    let lo = if successes == 0 { 0.0 } else { (centre - half).clamp(0.0, p) };
    let hi = if successes == trials { 1.0 } else { (centre + half).clamp(p, 1.0) };
    (lo, hi)
}
