//! Continuous-time heuristics for Ising and 3-SAT problems, their instance
//! generators, and the adapters that turn a trajectory into a tuning sample.

mod io;
mod ising;
mod sat;
mod tuning;

pub use io::{read_dimacs, read_ising_triplets, write_dimacs, write_ising_triplets};
pub use ising::{cim_cac_trajectory, generate_sk, ising_energy, sk_energy_threshold, IsingInstance};
pub use sat::{generate_random_3sat, sat_cac_trajectory, sat_terms, Clause, Literal, SatInstance};
pub use tuning::{HeldOutProtocol, ProblemGenerator, SuccessMode, TuningOracle};

use serde::{Deserialize, Serialize};

/// `(dt, p_init, p_end, β)` plus the number of Euler steps.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CacParams {
    pub dt: f64,
    pub p_init: f64,
    pub p_end: f64,
    pub beta: f64,
    pub steps: u64,
}

impl Default for CacParams {
    fn default() -> Self {
        Self {
            dt: 0.05,
            p_init: -1.0,
            p_end: 1.0,
            beta: 0.2,
            steps: 200,
        }
    }
}

impl CacParams {
    /// From a tuning vector `θ = (dt, p_init, p_end, β)`.
    pub fn from_theta(theta: &[f64], steps: u64) -> Option<Self> {
        match *theta {
            [dt, p_init, p_end, beta] => Some(Self {
                dt,
                p_init,
                p_end,
                beta,
                steps,
            }),
            _ => None,
        }
    }

    pub fn to_theta(&self) -> [f64; 4] {
        [self.dt, self.p_init, self.p_end, self.beta]
    }

    /// Linear pump schedule at step `t`.
    #[inline]
    pub fn pump(&self, t: u64) -> f64 {
        self.p_init + (self.p_end - self.p_init) * (t as f64 / self.steps as f64)
    }

    pub fn is_runnable(&self) -> bool {
        self.dt > 0.0 && self.steps >= 1 && self.to_theta().iter().all(|v| v.is_finite())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryResult {
    /// Lowest Ising energy seen, or the violated-clause count of the final
    /// state for SAT. `+∞` for a failed trajectory.
    pub best_energy: f64,
    /// SAT: some step satisfied every clause.
    pub satisfied: bool,
    /// SAT: first satisfying step. Ising: step where the best energy was first reached.
    pub first_success_step: Option<u64>,
    /// SAT: the last step satisfied every clause.
    pub final_satisfied: bool,
    pub steps_run: u64,
    pub failed: bool,
}

impl TrajectoryResult {
    pub(crate) fn failed(steps_run: u64) -> Self {
        Self {
            best_energy: f64::INFINITY,
            satisfied: false,
            first_success_step: None,
            final_satisfied: false,
            steps_run,
            failed: true,
        }
    }
}

/// `exp(-β_E (E - E_thresh))`, zero for failed trajectories.
pub fn soft_success_sample(best_energy: f64, beta_e: f64, e_thresh: f64) -> f64 {
    if !best_energy.is_finite() {
        return 0.0;
    }
    if beta_e == 0.0 {
        return 1.0;
    }
    (-beta_e * (best_energy - e_thresh)).exp()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn soft_success_examples() {
        assert_eq!(soft_success_sample(-10.0, 0.3, -10.0), 1.0);
        assert_eq!(soft_success_sample(123.0, 0.0, -10.0), 1.0);
        assert!((soft_success_sample(-1252.5, 0.01, -1352.5) - (-1f64).exp()).abs() < 1e-12);
        assert_eq!(soft_success_sample(f64::INFINITY, 0.01, 0.0), 0.0);
    }

    #[test]
    fn pump_is_linear() {
        let p = CacParams {
            p_init: -1.0,
            p_end: 1.0,
            steps: 4,
            ..CacParams::default()
        };
        assert_eq!(p.pump(0), -1.0);
        assert_eq!(p.pump(2), 0.0);
        assert_eq!(p.pump(4), 1.0);
    }
}
