use serde::{Deserialize, Serialize};

use super::{check_finite, check_start, record, BenchmarkTrace, RunOutput};
use crate::error::{invalid, Result};
use crate::numeric::{Matrix, RngStream};
use crate::objectives::Oracle;
use crate::smoothing::estimate_anisotropic;

/// Gaussian smoothing with a frozen window `L = w I`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FixedWindowConfig {
    pub w: f64,
    pub eta: f64,
    pub batch: usize,
    pub budget: u64,
    pub x0: Vec<f64>,
}

impl FixedWindowConfig {
    pub fn new(x0: Vec<f64>, w: f64, budget: u64) -> Self {
        let d = x0.len().max(1);
        Self {
            w,
            eta: 1.0 / d as f64,
            batch: 10 * d,
            budget,
            x0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.w > 0.0 && self.w.is_finite()) {
            return Err(invalid("w", "must be > 0"));
        }
        if !(self.eta > 0.0 && self.eta.is_finite()) {
            return Err(invalid("eta", "must be > 0"));
        }
        if self.batch == 0 {
            return Err(invalid("batch", "must be >= 1"));
        }
        Ok(())
    }
}

/// Per step `x ← x + η w gx`, so that `E[Δx] = η w² ∇h`.
pub fn fixed_window_run<O: Oracle + ?Sized>(cfg: &FixedWindowConfig, obj: &O, rng: &RngStream) -> Result<RunOutput> {
    cfg.validate()?;
    check_start(obj, &cfg.x0, cfg.budget)?;
    let d = cfg.x0.len();
    let l = Matrix::scaled_identity(d, cfg.w);
    let norm = cfg.w * (d as f64).sqrt();
    let mut x = cfg.x0.clone();
    let mut used = 0u64;
    let mut trace = BenchmarkTrace::default();
    let mut step = 0u64;
    while used < cfg.budget {
        let batch = (cfg.batch as u64).min(cfg.budget - used) as usize;
        let est = estimate_anisotropic(obj, &x, &l, batch, &rng.child(step))?;
        for (xi, g) in x.iter_mut().zip(&est.gx) {
            *xi += cfg.eta * cfg.w * g;
        }
        check_finite(&x, "position")?;
        used += batch as u64;
        trace.push(record(obj, step, used, &x, norm));
        step += 1;
    }
    Ok(RunOutput {
        x_final: x,
        trace,
        window: l,
    })
}
