use serde::{Deserialize, Serialize};

use super::{check_finite, check_start, record, scheduled_batch, BenchmarkTrace, RunOutput, StepOutcome, WindowState};
use crate::error::{invalid, Error, Result};
use crate::numeric::{clamp_window, window_norm, Matrix, RngStream};
use crate::objectives::Oracle;
use crate::smoothing::{estimate_anisotropic, GradEstimate};

/// Dynamic anisotropic smoothing parameters.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DasConfig {
    /// Batch size when `tr(LLᵀ) = 1`.
    pub b0: usize,
    /// Batch exponent: `B = B0 / tr(LLᵀ)^{κ/2}`.
    pub kappa: f64,
    pub dt: f64,
    pub alpha_l: f64,
    pub alpha_x: f64,
    /// Growth term on the window dynamics.
    pub lambda: f64,
    pub w_min: f64,
    pub w_max: f64,
    pub budget: u64,
    pub x0: Vec<f64>,
    pub w_init: f64,
    /// Rescale the time step by `(|L̂|/|L|)^{1/2}` before applying it.
    #[serde(default = "yes")]
    pub adaptive_dt: bool,
    /// Apply the `[w_min, w_max]` clamp after each step.
    #[serde(default = "yes")]
    pub clamp: bool,
}

fn yes() -> bool {
    true
}

impl DasConfig {
    /// Benchmark defaults for dimension `x0.len()`.
    pub fn new(x0: Vec<f64>, budget: u64) -> Self {
        let d = x0.len().max(1) as f64;
        Self {
            b0: 10 * x0.len().max(1),
            kappa: 0.5,
            dt: 0.5,
            alpha_l: 1.0 / d,
            alpha_x: 1.0,
            lambda: 0.0,
            w_min: 0.0,
            w_max: 2.0,
            budget,
            x0,
            w_init: 1.0,
            adaptive_dt: true,
            clamp: true,
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
        if !(self.w_init > 0.0) {
            return Err(invalid("w_init", "must be > 0"));
        }
        if self.clamp && !(0.0 <= self.w_min && self.w_min <= self.w_init && self.w_init <= self.w_max) {
            return Err(invalid(
                "w_init",
                format!(
                    "need 0 <= w_min <= w_init <= w_max, got {} / {} / {}",
                    self.w_min, self.w_init, self.w_max
                ),
            ));
        }
        if !(self.alpha_l.is_finite() && self.alpha_x.is_finite()) {
            return Err(invalid("alpha", "must be finite"));
        }
        Ok(())
    }
}

/// Preconditioned update direction before time-step scaling.
#[derive(Clone, Debug, PartialEq)]
pub struct DasDirection {
    /// `α_L (L gL + λ L)`
    pub dl: Matrix,
    /// `α_x L gx`
    pub dx: Vec<f64>,
}

/// `LLᵀ ∂h/∂L = L gL` and `LLᵀ ∂h/∂x = L gx`, scaled by the step gains.
pub fn das_direction(l: &Matrix, est: &GradEstimate, cfg: &DasConfig) -> DasDirection {
    let mut dl = l.matmul(&est.gl);
    dl.add_scaled(cfg.lambda, l);
    let dl = dl.scale(cfg.alpha_l);
    let dx = l.mul_vec(&est.gx).into_iter().map(|v| cfg.alpha_x * v).collect();
    DasDirection { dl, dx }
}

/// Apply one Euler step with the two-step time-step rule and the clamp.
fn apply(state: &mut WindowState, dir: &DasDirection, cfg: &DasConfig) -> Result<()> {
    let norm = window_norm(&state.l);
    if norm == 0.0 {
        return Err(Error::WindowCollapse { w_min: cfg.w_min });
    }
    let dt = if cfg.adaptive_dt {
        let mut trial = state.l.clone();
        trial.add_scaled(cfg.dt, &dir.dl);
        cfg.dt * (window_norm(&trial) / norm).sqrt()
    } else {
        cfg.dt
    };
    state.l.add_scaled(dt, &dir.dl);
    for (x, d) in state.x.iter_mut().zip(&dir.dx) {
        *x += dt * d;
    }
    if cfg.clamp {
        state.l = clamp_window(&state.l, cfg.w_min, cfg.w_max)?;
    }
    if !state.l.is_finite() {
        return Err(Error::NonFinite { context: "window" });
    }
    check_finite(&state.x, "position")?;
    if window_norm(&state.l) == 0.0 {
        return Err(Error::WindowCollapse { w_min: cfg.w_min });
    }
    Ok(())
}

/// One DAS step: schedule a batch, estimate, update `(x, L)`.
///
/// `rng` is the run stream; the step draws from `rng.child(step_index)`.
pub fn das_step<O: Oracle + ?Sized>(
    state: &mut WindowState,
    cfg: &DasConfig,
    obj: &O,
    rng: &RngStream,
) -> Result<StepOutcome> {
    let remaining = cfg.budget.saturating_sub(state.samples_used);
    if remaining == 0 {
        return Ok(StepOutcome::Exhausted);
    }
    let trace_llt = state.l.frobenius_norm().powi(2);
    let batch = scheduled_batch(cfg.b0, trace_llt, cfg.kappa, remaining);
    let est = estimate_anisotropic(obj, &state.x, &state.l, batch, &rng.child(state.step_index))?;
    if !est.is_finite() {
        return Err(Error::NonFinite { context: "gradient estimate" });
    }
    let dir = das_direction(&state.l, &est, cfg);
    apply(state, &dir, cfg)?;
    state.samples_used += batch as u64;
    state.step_index += 1;
    Ok(StepOutcome::Advanced { batch })
}

/// Run DAS to budget exhaustion, calling `observe` after every step.
pub fn das_run_observed<O, F>(cfg: &DasConfig, obj: &O, rng: &RngStream, mut observe: F) -> Result<RunOutput>
where
    O: Oracle + ?Sized,
    F: FnMut(&WindowState),
{
    cfg.validate()?;
    check_start(obj, &cfg.x0, cfg.budget)?;
    let d = cfg.x0.len();
    let mut state = WindowState::new(cfg.x0.clone(), Matrix::scaled_identity(d, cfg.w_init));
    let mut trace = BenchmarkTrace::default();
    while let StepOutcome::Advanced { .. } = das_step(&mut state, cfg, obj, rng)? {
        trace.push(record(
            obj,
            state.step_index - 1,
            state.samples_used,
            &state.x,
            window_norm(&state.l),
        ));
        observe(&state);
    }
    Ok(RunOutput {
        x_final: state.x,
        trace,
        window: state.l,
    })
}

/// Run DAS; returns the final position (not the best seen) and the trace.
pub fn das_run<O: Oracle + ?Sized>(cfg: &DasConfig, obj: &O, rng: &RngStream) -> Result<RunOutput> {
    das_run_observed(cfg, obj, rng, |_| {})
}
