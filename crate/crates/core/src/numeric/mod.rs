//! Shared random sampling and small dense-matrix utilities.

mod matrix;
mod rng;

pub use matrix::{sym2_eigen, Matrix};
pub use rng::RngStream;

use crate::error::{Error, Result};

/// Window size `|L| = tr(L Lᵀ)^{1/2}`.
pub fn window_norm(l: &Matrix) -> f64 {
    l.frobenius_norm()
}

/// Radially rescale `l` so that `w_min ≤ |L|/√D ≤ w_max`.
///
/// Values already within rounding of a bound pass through untouched, which
/// keeps the operation exactly idempotent.
pub fn clamp_window(l: &Matrix, w_min: f64, w_max: f64) -> Result<Matrix> {
    if !(w_min >= 0.0 && w_min <= w_max) {
        return Err(crate::error::invalid(
            "w_min/w_max",
            format!("need 0 <= w_min <= w_max, got {w_min}, {w_max}"),
        ));
    }
    let sqrt_d = (l.dim() as f64).sqrt();
    let norm = window_norm(l);
    let per_dim = norm / sqrt_d;
    const SLACK: f64 = 4.0 * f64::EPSILON;
    if per_dim > w_max * (1.0 + SLACK) {
        Ok(l.scale(w_max * sqrt_d / norm))
    } else if per_dim < w_min * (1.0 - SLACK) {
        if norm == 0.0 {
            return Err(Error::WindowCollapse { w_min });
        }
        Ok(l.scale(w_min * sqrt_d / norm))
    } else {
        Ok(l.clone())
    }
}

/// `d` standard-normal draws from `rng`.
pub fn gaussian_vector(rng: &mut RngStream, d: usize) -> Vec<f64> {
    rng.gaussian_vector(d)
}
