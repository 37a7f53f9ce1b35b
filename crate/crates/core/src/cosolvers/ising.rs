use serde::{Deserialize, Serialize};

use super::{CacParams, TrajectoryResult};
use crate::error::{invalid, Error, Result};
use crate::numeric::RngStream;

/// Dense symmetric couplings with zero diagonal.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IsingInstance {
    n: usize,
    j: Vec<f64>,
}

impl IsingInstance {
    /// Build from a full row-major `n × n` matrix; checks symmetry and the diagonal.
    pub fn from_dense(n: usize, j: Vec<f64>) -> Result<Self> {
        if j.len() != n * n {
            return Err(Error::DimensionMismatch {
                expected: n * n,
                got: j.len(),
            });
        }
        for a in 0..n {
            if j[a * n + a] != 0.0 {
                return Err(invalid("J", format!("diagonal entry {a} is nonzero")));
            }
            for b in 0..a {
                if j[a * n + b] != j[b * n + a] {
                    return Err(invalid("J", format!("not symmetric at ({a}, {b})")));
                }
            }
        }
        if j.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite { context: "couplings" });
        }
        Ok(Self { n, j })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn coupling(&self, a: usize, b: usize) -> f64 {
        self.j[a * self.n + b]
    }

    pub fn row(&self, a: usize) -> &[f64] {
        &self.j[a * self.n..(a + 1) * self.n]
    }

    fn energy_of_signs(&self, x: &[f64]) -> f64 {
        let mut e = 0.0;
        for a in 0..self.n {
            let sa = spin(x[a]);
            let row = self.row(a);
            let mut acc = 0.0;
            for b in a + 1..self.n {
                acc += row[b] * spin(x[b]);
            }
            e += sa * acc;
        }
        e
    }

    /// Ground state by exhaustive enumeration, with `σ_0 = +1` fixed.
    pub fn brute_force_ground_state(&self) -> Result<(f64, Vec<f64>)> {
        if self.n > 30 {
            return Err(invalid("n", format!("exhaustive search limited to n <= 30, got {}", self.n)));
        }
        let n = self.n;
        let mut best = f64::INFINITY;
        let mut best_sigma = vec![1.0; n];
        let mut sigma = vec![1.0; n];
        for mask in 0u64..(1u64 << n.saturating_sub(1)) {
            for (k, s) in sigma.iter_mut().enumerate().skip(1) {
                *s = if mask >> (k - 1) & 1 == 1 { -1.0 } else { 1.0 };
            }
            let e = self.energy_of_signs(&sigma);
            if e < best {
                best = e;
                best_sigma.copy_from_slice(&sigma);
            }
        }
        Ok((best, best_sigma))
    }
}

#[inline]
pub(crate) fn spin(v: f64) -> f64 {
    if v >= 0.0 {
        1.0
    } else {
        -1.0
    }
}

/// Sherrington–Kirkpatrick instance: `J_ij = J_ji ~ N(0, 1)` for `i < j`.
pub fn generate_sk(n: usize, rng: &mut RngStream) -> Result<IsingInstance> {
    if n < 2 {
        return Err(invalid("n", format!("need n >= 2, got {n}")));
    }
    let mut j = vec![0.0; n * n];
    for a in 0..n {
        for b in a + 1..n {
            let v = rng.normal();
            j[a * n + b] = v;
            j[b * n + a] = v;
        }
    }
    Ok(IsingInstance { n, j })
}

/// `E(σ) = Σ_{i<j} J_ij σ_i σ_j`.
pub fn ising_energy(inst: &IsingInstance, sigma: &[f64]) -> Result<f64> {
    if sigma.len() != inst.n {
        return Err(Error::DimensionMismatch {
            expected: inst.n,
            got: sigma.len(),
        });
    }
    if let Some(bad) = sigma.iter().find(|&&s| s != 1.0 && s != -1.0) {
        return Err(invalid("sigma", format!("spins must be +1 or -1, got {bad}")));
    }
    Ok(inst.energy_of_signs(sigma))
}

/// Average SK ground-state energy `N^{3/2}(-0.761 + 0.7 N^{-2/3})`.
pub fn sk_energy_threshold(n: usize) -> f64 {
    let n = n as f64;
    n.powf(1.5) * (-0.761 + 0.7 * n.powf(-2.0 / 3.0))
}

/// Chaotic amplitude control on an Ising instance.
///
/// `dx = x(p - 1 - x²) - e·(J x)`, `de = β e (1 - x²)`, with `p` ramped
/// linearly. The sign pattern is scored before the first step and after
/// every step; the lowest energy seen is returned.
pub fn cim_cac_trajectory(inst: &IsingInstance, params: &CacParams, rng: &mut RngStream) -> TrajectoryResult {
    let n = inst.n;
    let mut x: Vec<f64> = (0..n).map(|_| 0.1 * rng.normal()).collect();
    let mut e = vec![1.0; n];
    if !params.is_runnable() {
        return TrajectoryResult::failed(0);
    }
    let mut best = inst.energy_of_signs(&x);
    let mut best_step = 0u64;
    let mut field = vec![0.0; n];
    let steps = params.steps;
    for t in 0..steps {
        let p = params.pump(t);
        for (a, f) in field.iter_mut().enumerate() {
            *f = inst.row(a).iter().zip(&x).map(|(j, xb)| j * xb).sum();
        }
        for a in 0..n {
            let xa = x[a];
            let sq = xa * xa;
            x[a] = xa + params.dt * (xa * (p - 1.0 - sq) - e[a] * field[a]);
            e[a] += params.dt * params.beta * e[a] * (1.0 - sq);
        }
        if !(x.iter().all(|v| v.is_finite()) && e.iter().all(|v| v.is_finite())) {
            return TrajectoryResult::failed(t + 1);
        }
        let energy = inst.energy_of_signs(&x);
        if energy < best {
            best = energy;
            best_step = t + 1;
        }
    }
    TrajectoryResult {
        best_energy: best,
        satisfied: false,
        first_success_step: Some(best_step),
        final_satisfied: false,
        steps_run: steps,
        failed: false,
    }
}
