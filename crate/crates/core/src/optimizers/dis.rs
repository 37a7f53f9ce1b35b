use serde::{Deserialize, Serialize};

use super::{check_finite, check_start, record, scheduled_batch, BenchmarkTrace, RunOutput, StepOutcome};
use crate::error::{invalid, Error, Result};
use crate::numeric::{Matrix, RngStream};
use crate::objectives::Oracle;
use crate::smoothing::{estimate_isotropic, IsoGradEstimate};

/// Dynamic isotropic smoothing parameters: DAS restricted to `L = w I`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DisConfig {
    pub b0: usize,
    pub kappa: f64,
    pub dt: f64,
    pub alpha_w: f64,
    pub alpha_x: f64,
    pub lambda: f64,
    pub w_min: f64,
    pub w_max: f64,
    pub budget: u64,
    pub x0: Vec<f64>,
    pub w_init: f64,
}

impl DisConfig {
    pub fn new(x0: Vec<f64>, budget: u64) -> Self {
        let d = x0.len().max(1);
        Self {
            b0: 10 * d,
            kappa: 0.5,
            dt: 0.5,
            alpha_w: 1.0 / d as f64,
            alpha_x: 1.0,
            lambda: 0.0,
            w_min: 0.0,
            w_max: 2.0,
            budget,
            x0,
            w_init: 1.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.b0 == 0 {
            return Err(invalid("b0", "must be >= 1"));
        }
        if !(self.kappa >= 0.0) {
            return Err(invalid("kappa", "must be >= 0"));
        }
        if !(self.dt > 0.0) {
            return Err(invalid("dt", "must be > 0"));
        }
        if !(self.lambda >= 0.0) {
            return Err(invalid("lambda", "must be >= 0"));
        }
        if !(self.w_init > 0.0 && 0.0 <= self.w_min && self.w_min <= self.w_init && self.w_init <= self.w_max) {
            return Err(invalid(
                "w_init",
                format!(
                    "need 0 <= w_min <= w_init <= w_max and w_init > 0, got {} / {} / {}",
                    self.w_min, self.w_init, self.w_max
                ),
            ));
        }
        if !(self.alpha_w.is_finite() && self.alpha_x.is_finite()) {
            return Err(invalid("alpha", "must be finite"));
        }
        Ok(())
    }
}

/// Position and scalar window of a running DIS instance.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IsoWindowState {
    pub x: Vec<f64>,
    pub w: f64,
    pub step_index: u64,
    pub samples_used: u64,
}

impl IsoWindowState {
    pub fn new(x: Vec<f64>, w: f64) -> Self {
        Self {
            x,
            w,
            step_index: 0,
            samples_used: 0,
        }
    }

    /// `|L| = √D w`
    pub fn window_norm(&self) -> f64 {
        (self.x.len() as f64).sqrt() * self.w
    }
}

fn apply(state: &mut IsoWindowState, est: &IsoGradEstimate, cfg: &DisConfig) -> Result<()> {
    let w = state.w;
    let dw = cfg.alpha_w * (w * w * est.hw + cfg.lambda * w);
    let trial = (w + cfg.dt * dw).abs();
    let dt = cfg.dt * (trial / w).sqrt();
    let mut next = (w + dt * dw).abs();
    for (x, h) in state.x.iter_mut().zip(&est.hx) {
        *x += dt * cfg.alpha_x * w * w * h;
    }
    next = next.clamp(cfg.w_min, cfg.w_max);
    check_finite(&state.x, "position")?;
    if !next.is_finite() {
        return Err(Error::NonFinite { context: "window" });
    }
    if next == 0.0 {
        return Err(Error::WindowCollapse { w_min: cfg.w_min });
    }
    state.w = next;
    Ok(())
}

pub fn dis_step<O: Oracle + ?Sized>(
    state: &mut IsoWindowState,
    cfg: &DisConfig,
    obj: &O,
    rng: &RngStream,
) -> Result<StepOutcome> {
    let remaining = cfg.budget.saturating_sub(state.samples_used);
    if remaining == 0 {
        return Ok(StepOutcome::Exhausted);
    }
    let d = state.x.len() as f64;
    let batch = scheduled_batch(cfg.b0, d * state.w * state.w, cfg.kappa, remaining);
    let est = estimate_isotropic(obj, &state.x, state.w, batch, &rng.child(state.step_index))?;
    if !(est.hw.is_finite() && est.hx.iter().all(|h| h.is_finite())) {
        return Err(Error::NonFinite { context: "gradient estimate" });
    }
    apply(state, &est, cfg)?;
    state.samples_used += batch as u64;
    state.step_index += 1;
    Ok(StepOutcome::Advanced { batch })
}

pub fn dis_run<O: Oracle + ?Sized>(cfg: &DisConfig, obj: &O, rng: &RngStream) -> Result<RunOutput> {
    cfg.validate()?;
    check_start(obj, &cfg.x0, cfg.budget)?;
    let mut state = IsoWindowState::new(cfg.x0.clone(), cfg.w_init);
    let mut trace = BenchmarkTrace::default();
    while let StepOutcome::Advanced { .. } = dis_step(&mut state, cfg, obj, rng)? {
        trace.push(record(
            obj,
            state.step_index - 1,
            state.samples_used,
            &state.x,
            state.window_norm(),
        ));
    }
    let window = Matrix::scaled_identity(state.x.len(), state.w);
    Ok(RunOutput {
        x_final: state.x,
        trace,
        window,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::objectives::{NoiseModel, NoisyObjective};

    #[test]
    fn zero_gradient_leaves_state() {
        let cfg = DisConfig::new(vec![0.2, 0.7], 10);
        let mut state = IsoWindowState::new(cfg.x0.clone(), 0.8);
        let est = IsoGradEstimate {
            hx: vec![0.0, 0.0],
            hw: 0.0,
            batch_size: 1,
        };
        apply(&mut state, &est, &cfg).unwrap();
        assert_eq!(state.x, cfg.x0);
        assert_eq!(state.w, 0.8);
    }

    #[test]
    fn hand_evaluated_step() {
        let mut cfg = DisConfig::new(vec![0.0], 10);
        cfg.dt = 0.1;
        cfg.alpha_w = 1.0;
        let mut state = IsoWindowState::new(vec![0.0], 1.0);
        let est = IsoGradEstimate {
            hx: vec![0.5],
            hw: -1.0,
            batch_size: 1,
        };
        apply(&mut state, &est, &cfg).unwrap();
        assert!((state.w - 0.90513).abs() < 1e-5);
        assert!((state.x[0] - 0.04743).abs() < 1e-5);
    }

    #[test]
    fn window_shrinks_near_gaussian_peak() {
        let obj = NoisyObjective::new("gauss1", 1, NoiseModel::None, |x| (-0.5 * x[0] * x[0]).exp());
        for seed in 0..5 {
            let mut cfg = DisConfig::new(vec![0.05], 20_000);
            cfg.w_init = 1.0;
            let out = dis_run(&cfg, &obj, &RngStream::new(seed)).unwrap();
            let norms: Vec<f64> = out.trace.records.iter().map(|r| r.window_norm).collect();
            let q = norms.len() / 4;
            let early = norms[..q].iter().sum::<f64>() / q as f64;
            let late = norms[norms.len() - q..].iter().sum::<f64>() / q as f64;
            assert!(late < early, "seed {seed}: {early} -> {late}");
            assert!(out.x_final[0].abs() < 0.2);
        }
    }

    #[test]
    fn budget_ledger() {
        let obj = NoisyObjective::symmetric_quadratic(3, NoiseModel::AdditiveGaussian { sigma: 0.1 });
        let cfg = DisConfig::new(vec![0.5; 3], 1234);
        let out = dis_run(&cfg, &obj, &RngStream::new(9)).unwrap();
        assert_eq!(obj.calls(), 1234);
        assert_eq!(out.trace.samples_used(), 1234);
    }
}
