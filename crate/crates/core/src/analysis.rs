//! Gradient-estimation error near a maximum, kernel/Hessian alignment, and
//! convergence diagnostics.
//!
//! The error formulas take the Hessian `H = ∇²f(x̄)` of a maximum (negative
//! definite) and work with the half-curvature `C = -H/2`, the matrix for
//! which `f(x̄ + u) ≈ f(x̄) - uᵀ C u`. With `M = Lᵀ C L` the per-coordinate
//! variance of one sample of `L v f(Lv + x̄)` is
//!
//! ```text
//! (LLᵀ)_ii f²  +  Σ_jkl L_ij² M_kl² ν_jkl  -  2 f (LLᵀ)_ii tr M  -  4 f (L M Lᵀ)_ii
//! ```
//!
//! with `ν = 15` when `j = k = l`, `2` when exactly two indices agree, and
//! `1` otherwise.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::numeric::{sym2_eigen, Matrix, RngStream};
use crate::objectives::NoisyObjective;
use crate::optimizers::{das_run_observed, BenchmarkTrace, DasConfig};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum VarianceMode {
    Exact,
    Approximate,
    Empirical,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VarianceReport {
    /// `Var[(η_x)_i]`
    pub per_coordinate: Vec<f64>,
    /// `E = Σ_i Var[(η_x)_i]`
    pub total: f64,
    pub n_s: u64,
    pub mode: VarianceMode,
}

impl VarianceReport {
    fn new(per_coordinate: Vec<f64>, n_s: u64, mode: VarianceMode) -> Self {
        let total = per_coordinate.iter().sum();
        Self {
            per_coordinate,
            total,
            n_s,
            mode,
        }
    }

    /// The same report at a different sample count (`Var ∝ 1/n_s`).
    pub fn rescaled(&self, n_s: u64) -> Self {
        let k = self.n_s as f64 / n_s as f64;
        Self::new(self.per_coordinate.iter().map(|v| v * k).collect(), n_s, self.mode)
    }
}

fn check_inputs(l: &Matrix, h: &Matrix, n_s: u64) -> Result<()> {
    if l.dim() != h.dim() {
        return Err(Error::DimensionMismatch {
            expected: l.dim(),
            got: h.dim(),
        });
    }
    if !h.is_symmetric(1e-12 * (1.0 + h.frobenius_norm())) {
        return Err(invalid("h", "Hessian must be symmetric"));
    }
    if n_s == 0 {
        return Err(invalid("n_s", "need n_s >= 1"));
    }
    Ok(())
}

fn nu(j: usize, k: usize, l: usize) -> f64 {
    match (j == k, k == l, j == l) {
        (true, true, _) => 15.0,
        (false, false, false) => 1.0,
        _ => 2.0,
    }
}

/// `M = Lᵀ C L` with `C = -H/2`.
fn half_curvature_in_kernel_frame(l: &Matrix, h: &Matrix) -> Matrix {
    l.transpose().matmul(&h.scale(-0.5)).matmul(l)
}

/// Four-term variance of the position step near a maximum.
pub fn eta_x_variance_exact(l: &Matrix, h: &Matrix, f_max: f64, n_s: u64) -> Result<VarianceReport> {
    check_inputs(l, h, n_s)?;
    let d = l.dim();
    let m = half_curvature_in_kernel_frame(l, h);
    let s = l.gram();
    let lml = l.matmul(&m).matmul(&l.transpose());
    let tr_m = m.trace();
    let per = (0..d)
        .map(|i| {
            let mut quartic = 0.0;
            for j in 0..d {
                let lij2 = l[(i, j)] * l[(i, j)];
                for k in 0..d {
                    for q in 0..d {
                        quartic += lij2 * m[(k, q)] * m[(k, q)] * nu(j, k, q);
                    }
                }
            }
            let v = s[(i, i)] * f_max * f_max + quartic - 2.0 * f_max * s[(i, i)] * tr_m - 4.0 * f_max * lml[(i, i)];
            v / n_s as f64
        })
        .collect();
    Ok(VarianceReport::new(per, n_s, VarianceMode::Exact))
}

/// Trace-form approximation `tr S (f² + t² - 6 f t) / n_s` with `S = LLᵀ`,
/// `t = tr(Lᵀ C L)`. Coordinates share the total in proportion to `S_ii`.
pub fn eta_x_variance_approx(l: &Matrix, h: &Matrix, f_max: f64, n_s: u64) -> Result<VarianceReport> {
    check_inputs(l, h, n_s)?;
    let s = l.gram();
    let t = half_curvature_in_kernel_frame(l, h).trace();
    let factor = (f_max * f_max + t * t - 6.0 * f_max * t) / n_s as f64;
    let per = (0..l.dim()).map(|i| s[(i, i)] * factor).collect();
    Ok(VarianceReport::new(per, n_s, VarianceMode::Approximate))
}

/// Monte-Carlo variance of `Δx = L gx` over `reps` independent batches of
/// size `batch`, Bessel-corrected. The report's `n_s` is `batch`.
pub fn empirical_gradient_error(
    f: &(dyn Fn(&[f64]) -> f64 + Sync),
    x_bar: &[f64],
    l: &Matrix,
    batch: usize,
    reps: usize,
    rng: &RngStream,
) -> Result<VarianceReport> {
    let d = x_bar.len();
    if l.dim() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            got: l.dim(),
        });
    }
    if batch == 0 {
        return Err(invalid("batch", "need batch >= 1"));
    }
    if reps < 2 {
        return Err(invalid("reps", "need reps >= 2 for a sample variance"));
    }
    let steps: Vec<Vec<f64>> = (0..reps)
        .into_par_iter()
        .map(|r| {
            let rep_rng = rng.child(r as u64);
            let mut gx = vec![0.0; d];
            let mut v = vec![0.0; d];
            let mut u = vec![0.0; d];
            for i in 0..batch {
                let mut s = rep_rng.child(i as u64);
                s.fill_normal(&mut v);
                for a in 0..d {
                    u[a] = x_bar[a] + l.row(a).iter().zip(&v).map(|(p, q)| p * q).sum::<f64>();
                }
                let y = f(&u);
                for a in 0..d {
                    gx[a] += v[a] * y;
                }
            }
            gx.iter_mut().for_each(|g| *g /= batch as f64);
            l.mul_vec(&gx)
        })
        .collect();
    let n = reps as f64;
    let per = (0..d)
        .map(|a| {
            let mean = steps.iter().map(|s| s[a]).sum::<f64>() / n;
            steps.iter().map(|s| (s[a] - mean).powi(2)).sum::<f64>() / (n - 1.0)
        })
        .collect();
    Ok(VarianceReport::new(per, batch as u64, VarianceMode::Empirical))
}

/// Settings for [`alignment_scan`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AlignmentSetup {
    /// Curvature magnitudes of the objective; the Hessian is their negation.
    pub hessian_eigs: (f64, f64),
    /// Eigenvalues of `LLᵀ`.
    pub kernel_eigs: (f64, f64),
    /// Rotation of the objective's principal axes, radians.
    pub theta0: f64,
    /// Total Monte-Carlo draws per grid point for the empirical curve (0 skips it).
    pub empirical_draws: u64,
}

impl Default for AlignmentSetup {
    fn default() -> Self {
        Self {
            hessian_eigs: (1.0, 4.0),
            kernel_eigs: (0.01, 0.04),
            theta0: 0.0,
            empirical_draws: 0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AlignmentPoint {
    pub theta: f64,
    pub exact: f64,
    pub approx: f64,
    /// NaN when the empirical curve was not requested.
    pub empirical: f64,
}

/// Kernel `L = R(θ) diag(√k₁, √k₂)`.
pub fn rotated_kernel(kernel_eigs: (f64, f64), theta: f64) -> Matrix {
    Matrix::rotation2(theta).matmul(&Matrix::from_diag(&[kernel_eigs.0.sqrt(), kernel_eigs.1.sqrt()]))
}

/// Hessian `-R(θ₀) diag(h₁, h₂) R(θ₀)ᵀ` of a concave maximum.
pub fn rotated_hessian(hessian_eigs: (f64, f64), theta0: f64) -> Matrix {
    let r = Matrix::rotation2(theta0);
    r.matmul(&Matrix::from_diag(&[-hessian_eigs.0, -hessian_eigs.1]))
        .matmul(&r.transpose())
}

/// Gradient-estimation error `E(θ)` per sample (`n_s = 1`) for a Gaussian
/// maximum `f(z) = exp(½ zᵀ H z)` with `f(0) = 1`.
pub fn alignment_scan(theta_grid: &[f64], setup: &AlignmentSetup, rng: &RngStream) -> Result<Vec<AlignmentPoint>> {
    let h = rotated_hessian(setup.hessian_eigs, setup.theta0);
    let hq = h.clone();
    let f = move |z: &[f64]| {
        let hz = hq.mul_vec(z);
        (0.5 * (z[0] * hz[0] + z[1] * hz[1])).exp()
    };
    theta_grid
        .iter()
        .enumerate()
        .map(|(idx, &theta)| {
            let l = rotated_kernel(setup.kernel_eigs, theta);
            let exact = eta_x_variance_exact(&l, &h, 1.0, 1)?.total;
            let approx = eta_x_variance_approx(&l, &h, 1.0, 1)?.total;
            let empirical = if setup.empirical_draws >= 2 {
                let reps = setup.empirical_draws.min(10_000) as usize;
                let batch = (setup.empirical_draws / reps as u64).max(1) as usize;
                empirical_gradient_error(&f, &[0.0, 0.0], &l, batch, reps, &rng.child(idx as u64))?
                    .rescaled(1)
                    .total
            } else {
                f64::NAN
            };
            Ok(AlignmentPoint {
                theta,
                exact,
                approx,
                empirical,
            })
        })
        .collect()
}

/// Settings for [`eigenratio_trace`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EigenratioSetup {
    /// Ratio `r` of the objective's Hessian eigenvalues; the shape is `diag(1, r)`.
    pub ratio: f64,
    /// Rotation of the objective's principal axes, radians.
    pub theta0: f64,
    pub lambda: f64,
    pub budget: u64,
    pub x0: Vec<f64>,
    pub w_init: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EigenratioPoint {
    pub n_s: u64,
    /// Larger over smaller eigenvalue of `(LLᵀ)⁻¹`.
    pub ratio: f64,
    pub window_norm: f64,
    /// Angle of the principal axis of `(LLᵀ)⁻¹` with the largest eigenvalue.
    pub angle: f64,
}

/// Run DAS with growth term `λ` on the normalized Gaussian with Hessian
/// proportional to `R diag(1, r) Rᵀ` centred at the origin, recording the
/// kernel curvature's eigenvalue ratio after every step.
pub fn eigenratio_trace(setup: &EigenratioSetup, rng: &RngStream) -> Result<(Vec<EigenratioPoint>, BenchmarkTrace)> {
    if setup.x0.len() != 2 {
        return Err(Error::DimensionMismatch {
            expected: 2,
            got: setup.x0.len(),
        });
    }
    if !(setup.ratio > 0.0) {
        return Err(invalid("ratio", "must be > 0"));
    }
    if !(setup.lambda > 0.0) {
        return Err(invalid("lambda", "the growth term must be > 0"));
    }
    let r = Matrix::rotation2(setup.theta0);
    let shape = Matrix::from_diag(&[1.0, setup.ratio.sqrt()]).matmul(&r.transpose());
    let obj = NoisyObjective::gaussian(shape, vec![0.0, 0.0], crate::objectives::NoiseModel::None)?;
    let mut cfg = DasConfig::new(setup.x0.clone(), setup.budget);
    cfg.lambda = setup.lambda;
    cfg.w_init = setup.w_init;
    let mut points = Vec::new();
    let out = das_run_observed(&cfg, &obj, rng, |state| {
        let (hi, lo, theta) = sym2_eigen(&state.l.gram());
        // Eigenvalues of the inverse are reciprocals; the largest one
        // belongs to the smallest eigenvalue of LLᵀ, perpendicular to θ.
        points.push(EigenratioPoint {
            n_s: state.samples_used,
            ratio: hi / lo,
            window_norm: state.l.frobenius_norm(),
            angle: theta + std::f64::consts::FRAC_PI_2,
        });
    })?;
    Ok((points, out.trace))
}

/// Fit `ε ≈ c D n_s^{slope}` over the final decade of `(n_s, ε)` points.
///
/// `slope` is the least-squares slope of `log ε` on `log n_s`; `c` is the
/// geometric mean of `ε √n_s / D`, the intercept of the `-½` law.
/// Points with `ε ≤ 0` are dropped.
pub fn fit_convergence(points: &[(f64, f64)], dim: usize) -> Result<(f64, f64)> {
    const MIN_POINTS: usize = 10;
    if dim == 0 {
        return Err(invalid("dim", "need dim >= 1"));
    }
    let n_max = points.iter().map(|p| p.0).fold(f64::NEG_INFINITY, f64::max);
    let usable: Vec<(f64, f64)> = points
        .iter()
        .filter(|(n, e)| *e > 0.0 && *n > 0.0 && *n >= n_max / 10.0 && e.is_finite())
        .map(|(n, e)| (n.ln(), e.ln()))
        .collect();
    if usable.len() < MIN_POINTS {
        return Err(Error::InsufficientData {
            needed: MIN_POINTS,
            have: usable.len(),
        });
    }
    let k = usable.len() as f64;
    let mx = usable.iter().map(|p| p.0).sum::<f64>() / k;
    let my = usable.iter().map(|p| p.1).sum::<f64>() / k;
    let sxx: f64 = usable.iter().map(|p| (p.0 - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(invalid("points", "all n_s values coincide"));
    }
    let sxy: f64 = usable.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let slope = sxy / sxx;
    let log_c = usable.iter().map(|(ln_n, ln_e)| ln_e + 0.5 * ln_n).sum::<f64>() / k;
    Ok((log_c.exp() / dim as f64, slope))
}
