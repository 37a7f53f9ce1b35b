use std::sync::atomic::{AtomicU64, Ordering};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{
    cim_cac_trajectory, generate_random_3sat, generate_sk, sat_cac_trajectory, sk_energy_threshold, soft_success_sample,
    CacParams,
};
use crate::error::{invalid, Error, Result};
use crate::numeric::RngStream;
use crate::objectives::Oracle;

/// When a SAT trajectory counts as a success.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SuccessMode {
    #[default]
    AnyStep,
    FinalStep,
}

/// Random problem family sampled afresh on every oracle call.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum ProblemGenerator {
    Sat {
        n: usize,
        alpha: f64,
        #[serde(default)]
        success: SuccessMode,
    },
    Ising {
        n: usize,
        beta_e: f64,
    },
}

impl ProblemGenerator {
    pub fn validate(&self) -> Result<()> {
        match *self {
            ProblemGenerator::Sat { n, alpha, .. } => {
                if n < 3 {
                    return Err(invalid("n", format!("need n >= 3, got {n}")));
                }
                if !(alpha >= 0.0 && alpha.is_finite()) {
                    return Err(invalid("alpha", "must be >= 0"));
                }
            }
            ProblemGenerator::Ising { n, beta_e } => {
                if n < 2 {
                    return Err(invalid("n", format!("need n >= 2, got {n}")));
                }
                if !(beta_e >= 0.0 && beta_e.is_finite()) {
                    return Err(invalid("beta_e", "must be >= 0"));
                }
            }
        }
        Ok(())
    }

    /// One fitness sample: fresh instance from `rng.child(0)`, trajectory
    /// from `rng.child(1)`. Invalid parameters score zero.
    pub fn sample(&self, params: &CacParams, rng: &RngStream) -> Result<f64> {
        match *self {
            ProblemGenerator::Sat { n, alpha, success } => {
                let inst = generate_random_3sat(n, alpha, &mut rng.child(0))?;
                let r = sat_cac_trajectory(&inst, params, &mut rng.child(1));
                let ok = match success {
                    SuccessMode::AnyStep => r.satisfied,
                    SuccessMode::FinalStep => r.final_satisfied,
                };
                Ok(if ok { 1.0 } else { 0.0 })
            }
            ProblemGenerator::Ising { n, beta_e } => {
                let inst = generate_sk(n, &mut rng.child(0))?;
                let r = cim_cac_trajectory(&inst, params, &mut rng.child(1));
                Ok(soft_success_sample(r.best_energy, beta_e, sk_energy_threshold(n)))
            }
        }
    }
}

/// Fixed evaluation set: `instances` problems, `trajectories` runs each.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct HeldOutProtocol {
    pub instances: usize,
    pub trajectories: usize,
    pub seed: u64,
}

impl Default for HeldOutProtocol {
    fn default() -> Self {
        Self {
            instances: 20,
            trajectories: 50,
            seed: 0x005E_ED0F_4E1D,
        }
    }
}

/// Noisy fitness of a CAC parameter vector `θ = (dt, p_init, p_end, β)`.
pub struct TuningOracle {
    generator: ProblemGenerator,
    steps: u64,
    calls: AtomicU64,
}

impl TuningOracle {
    pub fn new(generator: ProblemGenerator, steps: u64) -> Result<Self> {
        generator.validate()?;
        if steps == 0 {
            return Err(invalid("steps", "need T >= 1"));
        }
        Ok(Self {
            generator,
            steps,
            calls: AtomicU64::new(0),
        })
    }

    pub fn generator(&self) -> &ProblemGenerator {
        &self.generator
    }

    pub fn steps(&self) -> u64 {
        self.steps
    }

    fn params(&self, theta: &[f64]) -> Result<CacParams> {
        CacParams::from_theta(theta, self.steps).ok_or(Error::DimensionMismatch {
            expected: 4,
            got: theta.len(),
        })
    }

    /// Mean fitness over a held-out instance set. Not charged to the budget.
    ///
    /// Each instance's trajectories share the instance; SAT scores are
    /// success rates, Ising scores are mean soft successes.
    pub fn held_out(&self, theta: &[f64], protocol: &HeldOutProtocol) -> Result<f64> {
        let params = self.params(theta)?;
        if protocol.instances == 0 || protocol.trajectories == 0 {
            return Err(invalid("held_out", "need at least one instance and trajectory"));
        }
        let root = RngStream::new(protocol.seed);
        let per_instance: Vec<f64> = (0..protocol.instances)
            .into_par_iter()
            .map(|i| {
                let inst_rng = root.child(i as u64);
                let sum: f64 = (0..protocol.trajectories)
                    .map(|t| self.trajectory_score(&params, &inst_rng, t as u64))
                    .sum::<Result<f64>>()?;
                Ok(sum / protocol.trajectories as f64)
            })
            .collect::<Result<_>>()?;
        Ok(per_instance.iter().sum::<f64>() / protocol.instances as f64)
    }

    fn trajectory_score(&self, params: &CacParams, inst_rng: &RngStream, t: u64) -> Result<f64> {
        let traj = inst_rng.child(1 + t);
        match self.generator {
            ProblemGenerator::Sat { n, alpha, success } => {
                let inst = generate_random_3sat(n, alpha, &mut inst_rng.child(0))?;
                let r = sat_cac_trajectory(&inst, params, &mut traj.clone());
                let ok = match success {
                    SuccessMode::AnyStep => r.satisfied,
                    SuccessMode::FinalStep => r.final_satisfied,
                };
                Ok(if ok { 1.0 } else { 0.0 })
            }
            ProblemGenerator::Ising { n, beta_e } => {
                let inst = generate_sk(n, &mut inst_rng.child(0))?;
                let r = cim_cac_trajectory(&inst, params, &mut traj.clone());
                Ok(soft_success_sample(r.best_energy, beta_e, sk_energy_threshold(n)))
            }
        }
    }
}

impl Oracle for TuningOracle {
    fn dim(&self) -> usize {
        4
    }

    fn observe(&self, x: &[f64], rng: &mut RngStream) -> Result<f64> {
        let params = self.params(x)?;
        let y = self.generator.sample(&params, rng)?;
        self.calls.fetch_add(1, Ordering::Relaxed);
        Ok(y)
    }

    fn calls(&self) -> u64 {
        self.calls.load(Ordering::Relaxed)
    }
}
