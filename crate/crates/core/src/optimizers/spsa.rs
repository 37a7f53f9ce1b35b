use serde::{Deserialize, Serialize};

use super::{check_finite, check_start, record, BenchmarkTrace, RunOutput};
use crate::error::{invalid, Result};
use crate::numeric::{Matrix, RngStream};
use crate::objectives::Oracle;

/// Simultaneous perturbation stochastic approximation.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpsaConfig {
    pub a: f64,
    pub c: f64,
    #[serde(rename = "A")]
    pub big_a: f64,
    pub alpha_gain: f64,
    pub gamma_gain: f64,
    pub budget: u64,
    pub x0: Vec<f64>,
}

impl SpsaConfig {
    pub fn new(x0: Vec<f64>, budget: u64) -> Self {
        Self {
            a: 0.5,
            c: 0.1,
            big_a: 10.0,
            alpha_gain: 0.602,
            gamma_gain: 0.101,
            budget,
            x0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("a", self.a), ("c", self.c), ("A", self.big_a)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(invalid(name, format!("must be > 0, got {v}")));
            }
        }
        if !(self.alpha_gain > 0.0 && self.gamma_gain > 0.0) {
            return Err(invalid("gain exponents", "must be > 0"));
        }
        Ok(())
    }

    /// `(a_k, c_k)` for iteration `k`.
    pub fn gains(&self, k: u64) -> (f64, f64) {
        let k = k as f64;
        (
            self.a / (k + 1.0 + self.big_a).powf(self.alpha_gain),
            self.c / (k + 1.0).powf(self.gamma_gain),
        )
    }
}

/// Ascent with a Rademacher stencil, two calls per iteration.
///
/// A final odd call left over by the budget is not spent.
pub fn spsa_run<O: Oracle + ?Sized>(cfg: &SpsaConfig, obj: &O, rng: &RngStream) -> Result<RunOutput> {
    cfg.validate()?;
    check_start(obj, &cfg.x0, cfg.budget)?;
    if cfg.budget < 2 {
        return Err(invalid("budget", "SPSA needs at least 2 calls"));
    }
    let d = cfg.x0.len();
    let mut x = cfg.x0.clone();
    let mut trace = BenchmarkTrace::default();
    let mut plus = vec![0.0; d];
    let mut minus = vec![0.0; d];
    for k in 0..cfg.budget / 2 {
        let (ak, ck) = cfg.gains(k);
        let step_rng = rng.child(k);
        let mut delta_rng = step_rng.child(0);
        let delta: Vec<f64> = (0..d).map(|_| delta_rng.rademacher()).collect();
        for i in 0..d {
            plus[i] = x[i] + ck * delta[i];
            minus[i] = x[i] - ck * delta[i];
        }
        let yp = obj.observe(&plus, &mut step_rng.child(1))?;
        let ym = obj.observe(&minus, &mut step_rng.child(2))?;
        let diff = (yp - ym) / (2.0 * ck);
        for i in 0..d {
            // Δ_i = ±1, so 1/Δ_i = Δ_i.
            x[i] += ak * delta[i] * diff;
        }
        check_finite(&x, "position")?;
        trace.push(record(obj, k, 2 * (k + 1), &x, ck * (d as f64).sqrt()));
    }
    Ok(RunOutput {
        x_final: x,
        trace,
        window: Matrix::zeros(d),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::objectives::{NoiseModel, NoisyObjective};

    #[test]
    fn constant_objective_does_not_move() {
        let obj = NoisyObjective::new("const", 3, NoiseModel::None, |_| 1.0);
        let cfg = SpsaConfig::new(vec![0.1, 0.2, 0.3], 50);
        let out = spsa_run(&cfg, &obj, &RngStream::new(0)).unwrap();
        assert_eq!(out.x_final, cfg.x0);
        assert_eq!(obj.calls(), 50);
    }

    #[test]
    fn gains_decrease() {
        let cfg = SpsaConfig::new(vec![0.0], 10);
        let mut prev = cfg.gains(0);
        for k in 1..100 {
            let g = cfg.gains(k);
            assert!(g.0 < prev.0 && g.1 < prev.1);
            prev = g;
        }
    }

    #[test]
    fn noiseless_quadratic_converges() {
        for seed in 0..3 {
            let mut r = RngStream::new(seed);
            let obj = NoisyObjective::symmetric_quadratic(2, NoiseModel::None);
            let cfg = SpsaConfig::new(vec![r.uniform(), r.uniform()], 10_000);
            let out = spsa_run(&cfg, &obj, &r.child(7)).unwrap();
            let dist = out.x_final.iter().map(|v| v * v).sum::<f64>().sqrt();
            assert!(dist < 0.05, "seed {seed}: {dist}");
            assert_eq!(obj.calls(), out.trace.samples_used());
        }
    }

    #[test]
    fn odd_budget_leaves_one_call() {
        let obj = NoisyObjective::symmetric_quadratic(2, NoiseModel::None);
        let cfg = SpsaConfig::new(vec![0.5, 0.5], 11);
        let out = spsa_run(&cfg, &obj, &RngStream::new(0)).unwrap();
        assert_eq!(out.trace.samples_used(), 10);
        assert_eq!(obj.calls(), 10);
    }
}
