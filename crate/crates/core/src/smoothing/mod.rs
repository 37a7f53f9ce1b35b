//! Monte-Carlo estimators of the Gaussian-smoothed objective's gradients.
//!
//! With `h(L, x) = E_v[f(L v + x)]`, `v ~ N(0, I)`:
//!
//! * `∂h/∂x = (L⁻¹)ᵀ E[v f(Lv + x)]`
//! * `∂h/∂L = (L⁻¹)ᵀ E[(v vᵀ - I) f(Lv + x)]`
//!
//! The estimators return the raw moments (the expectations above) without
//! the `(L⁻¹)ᵀ` factor. Preconditioned updates only ever need `L · moment`,
//! so no inverse is taken on the hot path.

mod quadrature;

pub use quadrature::{gauss_hermite, smoothed_value_oracle, MAX_QUADRATURE_DIM, MIN_QUADRATURE_ORDER};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::numeric::{Matrix, RngStream};
use crate::objectives::Oracle;

/// Batches at least this large are evaluated on the rayon pool.
const PARALLEL_MIN_BATCH: usize = 16;

/// One oracle query: the standard-normal draw and the observed value.
#[derive(Clone, Debug, PartialEq)]
pub struct Sample {
    pub v: Vec<f64>,
    pub y: f64,
}

/// Batch means `gx = E[v ŷ]` and `gL = E[(v vᵀ - I) ŷ]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GradEstimate {
    pub gx: Vec<f64>,
    pub gl: Matrix,
    pub batch_size: usize,
}

/// Isotropic-window estimates of `∇ₓh(w, x)` and `∂h/∂w`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IsoGradEstimate {
    pub hx: Vec<f64>,
    pub hw: f64,
    pub batch_size: usize,
}

/// Draw `batch` samples at `L v + x`.
///
/// Sample `i` uses `rng.child(i)` for both its direction and its observation
/// noise, so the result does not depend on how the batch is scheduled.
pub fn sample_batch<O: Oracle + ?Sized>(
    obj: &O,
    x: &[f64],
    l: &Matrix,
    batch: usize,
    rng: &RngStream,
) -> Result<Vec<Sample>> {
    let d = x.len();
    if l.dim() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            got: l.dim(),
        });
    }
    if batch == 0 {
        return Err(invalid("batch", "must be >= 1"));
    }
    let one = |i: usize| -> Result<Sample> {
        let mut stream = rng.child(i as u64);
        let v = stream.gaussian_vector(d);
        let u: Vec<f64> = l.mul_vec(&v).iter().zip(x).map(|(a, b)| a + b).collect();
        let y = obj.observe(&u, &mut stream)?;
        Ok(Sample { v, y })
    };
    if batch >= PARALLEL_MIN_BATCH {
        (0..batch).into_par_iter().map(one).collect()
    } else {
        (0..batch).map(one).collect()
    }
}

impl GradEstimate {
    /// Reduce samples in index order.
    pub fn from_samples(samples: &[Sample]) -> Self {
        assert!(!samples.is_empty(), "empty batch");
        let d = samples[0].v.len();
        let mut gx = vec![0.0; d];
        let mut gl = Matrix::zeros(d);
        for s in samples {
            for i in 0..d {
                gx[i] += s.v[i] * s.y;
                for j in 0..d {
                    let delta = if i == j { 1.0 } else { 0.0 };
                    gl[(i, j)] += (s.v[i] * s.v[j] - delta) * s.y;
                }
            }
        }
        let b = samples.len() as f64;
        gx.iter_mut().for_each(|g| *g /= b);
        Self {
            gx,
            gl: gl.scale(1.0 / b),
            batch_size: samples.len(),
        }
    }

    pub fn is_finite(&self) -> bool {
        self.gx.iter().all(|g| g.is_finite()) && self.gl.is_finite()
    }
}

/// Anisotropic estimate from `batch` fresh samples.
pub fn estimate_anisotropic<O: Oracle + ?Sized>(
    obj: &O,
    x: &[f64],
    l: &Matrix,
    batch: usize,
    rng: &RngStream,
) -> Result<GradEstimate> {
    let samples = sample_batch(obj, x, l, batch, rng)?;
    Ok(GradEstimate::from_samples(&samples))
}

/// Isotropic estimate with window `w`; `u = x + w v`.
pub fn estimate_isotropic<O: Oracle + ?Sized>(
    obj: &O,
    x: &[f64],
    w: f64,
    batch: usize,
    rng: &RngStream,
) -> Result<IsoGradEstimate> {
    if !(w > 0.0) || !w.is_finite() {
        return Err(invalid("w", format!("window must be positive, got {w}")));
    }
    let d = x.len();
    let samples = sample_batch(obj, x, &Matrix::scaled_identity(d, w), batch, rng)?;
    let mut hx = vec![0.0; d];
    let mut hw = 0.0;
    for s in &samples {
        // (u - x) / w² = v / w and |u - x|²/w³ - D/w = (|v|² - D) / w.
        let sq: f64 = s.v.iter().map(|v| v * v).sum();
        for i in 0..d {
            hx[i] += s.v[i] / w * s.y;
        }
        hw += (sq - d as f64) / w * s.y;
    }
    let b = batch as f64;
    hx.iter_mut().for_each(|h| *h /= b);
    Ok(IsoGradEstimate {
        hx,
        hw: hw / b,
        batch_size: batch,
    })
}
