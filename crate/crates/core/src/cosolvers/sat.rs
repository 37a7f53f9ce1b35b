use serde::{Deserialize, Serialize};

use super::{CacParams, TrajectoryResult};
use crate::error::{invalid, Error, Result};
use crate::numeric::RngStream;

/// Variable index (0-based) with polarity; `positive` is satisfied by `x = +1`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Literal {
    pub var: usize,
    pub positive: bool,
}

impl Literal {
    pub fn new(var: usize, positive: bool) -> Self {
        Self { var, positive }
    }

    /// `C_ij ∈ {+1, -1}`.
    #[inline]
    pub fn sign(self) -> f64 {
        if self.positive {
            1.0
        } else {
            -1.0
        }
    }

    /// DIMACS form: 1-based, negative for negated literals.
    pub fn to_dimacs(self) -> i64 {
        let v = self.var as i64 + 1;
        if self.positive {
            v
        } else {
            -v
        }
    }
}

pub type Clause = [Literal; 3];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SatInstance {
    n: usize,
    clauses: Vec<Clause>,
}

impl SatInstance {
    pub fn new(n: usize, clauses: Vec<Clause>) -> Result<Self> {
        for (k, c) in clauses.iter().enumerate() {
            if c.iter().any(|l| l.var >= n) {
                return Err(invalid("clauses", format!("clause {k} references a variable >= {n}")));
            }
            if c[0].var == c[1].var || c[0].var == c[2].var || c[1].var == c[2].var {
                return Err(invalid("clauses", format!("clause {k} repeats a variable")));
            }
        }
        Ok(Self { n, clauses })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn clauses(&self) -> &[Clause] {
        &self.clauses
    }

    /// Number of clauses violated by the sign pattern of `x` (`sign(0) = +1`).
    pub fn violated(&self, x: &[f64]) -> usize {
        self.clauses
            .iter()
            .filter(|c| c.iter().all(|l| (x[l.var] >= 0.0) != l.positive))
            .count()
    }

    pub fn is_satisfied_by(&self, x: &[f64]) -> bool {
        self.clauses
            .iter()
            .all(|c| c.iter().any(|l| (x[l.var] >= 0.0) == l.positive))
    }

    /// Exhaustive satisfiability check, returning a satisfying ±1 assignment.
    pub fn brute_force_solution(&self) -> Result<Option<Vec<f64>>> {
        if self.n > 26 {
            return Err(invalid("n", format!("exhaustive search limited to n <= 26, got {}", self.n)));
        }
        let mut x = vec![0.0; self.n];
        for mask in 0u64..(1u64 << self.n) {
            for (k, v) in x.iter_mut().enumerate() {
                *v = if mask >> k & 1 == 1 { 1.0 } else { -1.0 };
            }
            if self.is_satisfied_by(&x) {
                return Ok(Some(x));
            }
        }
        Ok(None)
    }
}

/// Random 3-SAT with `round(α N)` clauses over distinct variables.
pub fn generate_random_3sat(n: usize, alpha: f64, rng: &mut RngStream) -> Result<SatInstance> {
    if n < 3 {
        return Err(invalid("n", format!("need n >= 3, got {n}")));
    }
    if !(alpha >= 0.0 && alpha.is_finite()) {
        return Err(invalid("alpha", format!("must be >= 0, got {alpha}")));
    }
    let m = (alpha * n as f64).round() as usize;
    let pick = |rng: &mut RngStream| ((rng.uniform() * n as f64) as usize).min(n - 1);
    let clauses = (0..m)
        .map(|_| {
            let a = pick(rng);
            let mut b = pick(rng);
            while b == a {
                b = pick(rng);
            }
            let mut c = pick(rng);
            while c == a || c == b {
                c = pick(rng);
            }
            [a, b, c].map(|v| Literal::new(v, rng.uniform() < 0.5))
        })
        .collect();
    Ok(SatInstance { n, clauses })
}

/// Per-clause `K_j = Π (1 - C_ij x_i)/2` and, for each literal slot,
/// `K_ij = (-C_ij/2) Π_{k≠i} (1 - C_kj x_k)/2`.
pub fn sat_terms(inst: &SatInstance, x: &[f64]) -> Result<(Vec<f64>, Vec<[f64; 3]>)> {
    if x.len() != inst.n {
        return Err(Error::DimensionMismatch {
            expected: inst.n,
            got: x.len(),
        });
    }
    let mut k = Vec::with_capacity(inst.clauses.len());
    let mut partial = Vec::with_capacity(inst.clauses.len());
    for c in &inst.clauses {
        let (kj, pj) = clause_terms(c, x);
        k.push(kj);
        partial.push(pj);
    }
    Ok((k, partial))
}

#[inline]
fn clause_terms(c: &Clause, x: &[f64]) -> (f64, [f64; 3]) {
    let f = c.map(|l| 0.5 * (1.0 - l.sign() * x[l.var]));
    let kj = f[0] * f[1] * f[2];
    let pj = [
        -0.5 * c[0].sign() * f[1] * f[2],
        -0.5 * c[1].sign() * f[0] * f[2],
        -0.5 * c[2].sign() * f[0] * f[1],
    ];
    (kj, pj)
}

/// Coherent SAT dynamics: `dx_i = x_i(p - 1 - x_i²) - e_i Σ_j K_ij`,
/// `de_i = β e_i (1 - x_i²)`.
///
/// Runs all `T` steps. Success is recorded whenever the sign pattern
/// satisfies every clause, including before the first step.
pub fn sat_cac_trajectory(inst: &SatInstance, params: &CacParams, rng: &mut RngStream) -> TrajectoryResult {
    let n = inst.n;
    let mut x: Vec<f64> = (0..n).map(|_| 0.1 * rng.normal()).collect();
    let mut e = vec![1.0; n];
    if !params.is_runnable() {
        return TrajectoryResult::failed(0);
    }
    let mut first = inst.is_satisfied_by(&x).then_some(0u64);
    let mut last_ok = first.is_some();
    let mut force = vec![0.0; n];
    for t in 0..params.steps {
        let p = params.pump(t);
        force.iter_mut().for_each(|v| *v = 0.0);
        for c in &inst.clauses {
            let (_, pj) = clause_terms(c, &x);
            for (l, kij) in c.iter().zip(pj) {
                force[l.var] += kij;
            }
        }
        for i in 0..n {
            let xi = x[i];
            let sq = xi * xi;
            x[i] = xi + params.dt * (xi * (p - 1.0 - sq) - e[i] * force[i]);
            e[i] += params.dt * params.beta * e[i] * (1.0 - sq);
        }
        if !(x.iter().all(|v| v.is_finite()) && e.iter().all(|v| v.is_finite())) {
            return TrajectoryResult::failed(t + 1);
        }
        last_ok = inst.is_satisfied_by(&x);
        if last_ok && first.is_none() {
            first = Some(t + 1);
        }
    }
    TrajectoryResult {
        best_energy: inst.violated(&x) as f64,
        satisfied: first.is_some(),
        first_success_step: first,
        final_satisfied: last_ok,
        steps_run: params.steps,
        failed: false,
    }
}
