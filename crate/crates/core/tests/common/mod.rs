#![allow(dead_code)]

use std::sync::Arc;

use anisotune::numeric::{Matrix, RngStream};
use anisotune::objectives::{NoiseModel, NoisyObjective};
use anisotune::smoothing::{sample_batch, smoothed_value_oracle};

const FD_STEP: f64 = 1e-3;
const QUAD_ORDER: usize = 8;

/// Sum of monomials `c · Π x_k^{e_k}`.
#[derive(Clone, Debug)]
pub struct Poly {
    pub dim: usize,
    pub terms: Vec<(f64, Vec<u32>)>,
}

impl Poly {
    /// Up to six random monomials of total degree at most `max_degree`.
    pub fn random(dim: usize, max_degree: u32, rng: &mut RngStream) -> Self {
        let n_terms = 1 + (rng.uniform() * 6.0) as usize;
        let terms = (0..n_terms)
            .map(|_| {
                let coef = 2.0 * rng.uniform() - 1.0;
                let mut exps = vec![0u32; dim];
                let degree = (rng.uniform() * (max_degree + 1) as f64) as u32;
                for _ in 0..degree {
                    exps[(rng.uniform() * dim as f64) as usize] += 1;
                }
                (coef, exps)
            })
            .collect();
        Self { dim, terms }
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        self.terms
            .iter()
            .map(|(c, e)| c * x.iter().zip(e).map(|(xi, &k)| xi.powi(k as i32)).product::<f64>())
            .sum()
    }

    pub fn objective(&self) -> NoisyObjective {
        let p = Arc::new(self.clone());
        NoisyObjective::new("poly", self.dim, NoiseModel::None, move |x| p.eval(x))
    }

    fn smoothed(&self, x: &[f64], l: &Matrix) -> f64 {
        let f = |u: &[f64]| self.eval(u);
        smoothed_value_oracle(&f, x, l, QUAD_ORDER).expect("small dimension")
    }
}

/// Well-conditioned random window: diagonal in [0.2, 1] plus small off-diagonal terms.
pub fn random_window(dim: usize, rng: &mut RngStream) -> Matrix {
    let mut l = Matrix::zeros(dim);
    for i in 0..dim {
        for j in 0..dim {
            l[(i, j)] = if i == j {
                0.2 + 0.8 * rng.uniform()
            } else {
                0.3 * (2.0 * rng.uniform() - 1.0)
            };
        }
    }
    l
}

pub fn random_point(dim: usize, rng: &mut RngStream) -> Vec<f64> {
    (0..dim).map(|_| 2.0 * rng.uniform() - 1.0).collect()
}

fn mean_se(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let v: Vec<f64> = values.collect();
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    let var = v.iter().map(|a| (a - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// Standardized gaps between the sampled gradient estimates and central
/// differences of the quadrature value.
pub struct EstimatorCheck {
    /// One per coordinate of `(L⁻¹)ᵀ gx`.
    pub z_x: Vec<f64>,
    /// One per direction in `deltas`, for `⟨(L⁻¹)ᵀ gL, Δ⟩`.
    pub z_l: Vec<f64>,
}

impl EstimatorCheck {
    pub fn max_abs(&self) -> f64 {
        self.z_x.iter().chain(&self.z_l).fold(0.0, |m, z| m.max(z.abs()))
    }

    pub fn all(&self) -> impl Iterator<Item = f64> + '_ {
        self.z_x.iter().chain(&self.z_l).copied()
    }
}

pub fn estimator_check(p: &Poly, x: &[f64], l: &Matrix, deltas: &[Matrix], batch: usize, seed: u64) -> EstimatorCheck {
    let d = x.len();
    let obj = p.objective();
    let samples = sample_batch(&obj, x, l, batch, &RngStream::new(seed)).unwrap();
    let lit = l.inverse().unwrap().transpose();

    let per_x: Vec<Vec<f64>> = samples
        .iter()
        .map(|s| lit.mul_vec(&s.v).into_iter().map(|a| a * s.y).collect())
        .collect();
    let z_x = (0..d)
        .map(|k| {
            let (m, se) = mean_se(per_x.iter().map(|r| r[k]));
            let (mut xp, mut xm) = (x.to_vec(), x.to_vec());
            xp[k] += FD_STEP;
            xm[k] -= FD_STEP;
            let fd = (p.smoothed(&xp, l) - p.smoothed(&xm, l)) / (2.0 * FD_STEP);
            (m - fd) / se
        })
        .collect();

    let per_l: Vec<Matrix> = samples
        .iter()
        .map(|s| {
            let mut g = Matrix::outer(&s.v, &s.v);
            g.add_scaled(-1.0, &Matrix::identity(d));
            lit.matmul(&g).scale(s.y)
        })
        .collect();
    let z_l = deltas
        .iter()
        .map(|delta| {
            let (m, se) = mean_se(per_l.iter().map(|g| g.dot(delta)));
            let (mut lp, mut lm) = (l.clone(), l.clone());
            lp.add_scaled(FD_STEP, delta);
            lm.add_scaled(-FD_STEP, delta);
            let fd = (p.smoothed(x, &lp) - p.smoothed(x, &lm)) / (2.0 * FD_STEP);
            (m - fd) / se
        })
        .collect();
    EstimatorCheck { z_x, z_l }
}

/// Unit matrices `E_ij`, row-major.
pub fn unit_directions(dim: usize) -> Vec<Matrix> {
    let mut out = Vec::with_capacity(dim * dim);
    for i in 0..dim {
        for j in 0..dim {
            let mut e = Matrix::zeros(dim);
            e[(i, j)] = 1.0;
            out.push(e);
        }
    }
    out
}
