use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use super::grid::Grid1D;
use super::process::SamplePath;
use crate::error::{Error, Result};

/// Values of a field on the product grid `sgrid × tgrid`, row-major in `s`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FieldSample {
    pub sgrid: Grid1D,
    pub tgrid: Grid1D,
    pub values: Vec<f64>,
}

impl FieldSample {
    pub fn new(sgrid: Grid1D, tgrid: Grid1D, values: Vec<f64>) -> Result<Self> {
        if values.len() != sgrid.len() * tgrid.len() {
            return Err(Error::GridMismatch(format!(
                "{} values for a {}×{} grid",
                values.len(),
                sgrid.len(),
                tgrid.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidModel("field has non-finite values".into()));
        }
        Ok(Self { sgrid, tgrid, values })
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.tgrid.len() + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        let nt = self.tgrid.len();
        &self.values[i * nt..(i + 1) * nt]
    }
}

fn offset_steps(path: &Grid1D, x: f64, what: &str) -> Result<i64> {
    let k = (x / path.dt()).round();
    if (x - k * path.dt()).abs() > 1e-9 * path.dt().max(x.abs()) {
        return Err(Error::GridMismatch(format!("{what} {x} is not a multiple of the path step {}", path.dt())));
    }
    Ok(k as i64)
}

/// `Z(s,t) = X(s+t) − X(s)` on the nodes of `sgrid × tgrid`.
pub fn incremental_field(path: &SamplePath, sgrid: Grid1D, tgrid: Grid1D) -> Result<FieldSample> {
    let pg = &path.grid;
    let s0 = offset_steps(pg, sgrid.origin() - pg.origin(), "s-origin")?;
    let ks = offset_steps(pg, sgrid.dt(), "s-step")?;
    let t0 = offset_steps(pg, tgrid.origin(), "t-origin")?;
    let kt = offset_steps(pg, tgrid.dt(), "t-step")?;
    if ks == 0 || kt == 0 {
        return Err(Error::GridMismatch("field steps are finer than the path step".into()));
    }
    let n = pg.len() as i64;
    let (ns, nt) = (sgrid.len() as i64, tgrid.len() as i64);
    let corners = [s0, s0 + (ns - 1) * ks, s0 + t0, s0 + (ns - 1) * ks + t0 + (nt - 1) * kt, s0 + t0 + (nt - 1) * kt];
    if corners.iter().any(|&c| c < 0 || c >= n) {
        return Err(Error::GridMismatch(format!("s+t reaches outside the path grid [{}, {}]", pg.origin(), pg.end())));
    }
    let x = &path.values;
    let mut values = Vec::with_capacity((ns * nt) as usize);
    for i in 0..ns {
        let si = s0 + i * ks;
        for j in 0..nt {
            let idx = si + t0 + j * kt;
            values.push(x[idx as usize] - x[si as usize]);
        }
    }
    Ok(FieldSample { sgrid, tgrid, values })
}

/// Maximum over all grid nodes.
pub fn field_supremum(f: &FieldSample) -> f64 {
    f.values.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
}

/// `max_{0≤i≤s_steps, 0≤j≤t_steps} x[i+j] − x[i]` in one pass with a
/// sliding-window minimum; equal to [`field_supremum`] of the incremental
/// field on the path's own step.
pub fn shepp_supremum(x: &[f64], s_steps: usize, t_steps: usize) -> f64 {
    assert!(x.len() > s_steps + t_steps, "path too short for the Shepp window");
    let mut window: VecDeque<usize> = VecDeque::with_capacity(t_steps + 1);
    let mut best = f64::NEG_INFINITY;
    for k in 0..=s_steps + t_steps {
        if k <= s_steps {
            while window.back().is_some_and(|&i| x[i] >= x[k]) {
                window.pop_back();
            }
            window.push_back(k);
        }
        while window.front().is_some_and(|&i| i + t_steps < k) {
            window.pop_front();
        }
        let lo = x[*window.front().expect("window never empty")];
        best = best.max(x[k] - lo);
    }
    best
}

/// Maximum loss `max_{s≤t}(x(s) − x(t))` and span `max x − min x`, in one pass.
pub fn max_loss_and_span_of(x: &[f64]) -> (f64, f64) {
    assert!(!x.is_empty());
    let mut run_max = x[0];
    let mut lo = x[0];
    let mut loss = 0.0f64;
    for &v in x {
        run_max = run_max.max(v);
        lo = lo.min(v);
        loss = loss.max(run_max - v);
    }
    (loss, run_max - lo)
}

pub fn max_loss_and_span(path: &SamplePath) -> (f64, f64) {
    max_loss_and_span_of(&path.values)
}
