use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Uniform 1-D grid `origin, origin + dt, …, origin + (n−1)·dt`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid1D {
    n: usize,
    dt: f64,
    origin: f64,
}

impl Grid1D {
    pub fn new(n: usize, dt: f64, origin: f64) -> Result<Self> {
        if n < 2 {
            return Err(Error::InvalidGrid(format!("need at least 2 points, got {n}")));
        }
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(Error::InvalidGrid(format!("step must be positive and finite, got {dt}")));
        }
        if !origin.is_finite() {
            return Err(Error::InvalidGrid(format!("origin must be finite, got {origin}")));
        }
        Ok(Self { n, dt, origin })
    }

    /// Grid covering `[origin, origin + length]` with `steps` equal steps.
    pub fn spanning(origin: f64, length: f64, steps: usize) -> Result<Self> {
        if steps == 0 {
            return Err(Error::InvalidGrid("need at least one step".into()));
        }
        Self::new(steps + 1, length / steps as f64, origin)
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn origin(&self) -> f64 {
        self.origin
    }

    pub fn point(&self, i: usize) -> f64 {
        self.origin + i as f64 * self.dt
    }

    pub fn end(&self) -> f64 {
        self.point(self.n - 1)
    }

    pub fn points(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.n).map(|i| self.point(i))
    }

    /// Number of whole steps of `self` making up `len`, if it is (nearly) an integer.
    pub(crate) fn steps_in(&self, len: f64) -> Option<usize> {
        let k = len / self.dt;
        let r = k.round();
        ((k - r).abs() <= 1e-9 * r.max(1.0) && r >= 0.0).then_some(r as usize)
    }
}
