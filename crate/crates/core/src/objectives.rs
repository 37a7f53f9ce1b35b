//! Artificial fitness functions and the noise models that turn them into
//! oracles.

use std::fmt;
use std::str::FromStr;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::{Matrix, RngStream};

/// Something that returns one noisy scalar per call.
///
/// Implementations count their own calls; that count is the budget ledger.
pub trait Oracle: Sync {
    fn dim(&self) -> usize;

    /// One noisy observation at `x`.
    fn observe(&self, x: &[f64], rng: &mut RngStream) -> Result<f64>;

    /// Noiseless value at `x`, if known. Never charged to the budget.
    fn true_value(&self, _x: &[f64]) -> Option<f64> {
        None
    }

    /// Number of successful `observe` calls so far.
    fn calls(&self) -> u64;
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum NoiseModel {
    None,
    /// Returns 1 with probability `f(x)`, else 0.
    Bernoulli,
    AdditiveGaussian { sigma: f64 },
}

pub type FitnessFn = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;

/// A deterministic fitness function plus a noise model.
pub struct NoisyObjective {
    name: String,
    dim: usize,
    f: FitnessFn,
    noise: NoiseModel,
    calls: AtomicU64,
}

impl NoisyObjective {
    pub fn new(
        name: impl Into<String>,
        dim: usize,
        noise: NoiseModel,
        f: impl Fn(&[f64]) -> f64 + Send + Sync + 'static,
    ) -> Self {
        Self {
            name: name.into(),
            dim,
            f: Arc::new(f),
            noise,
            calls: AtomicU64::new(0),
        }
    }

    pub fn modified_rosenbrock(dim: usize, beta: f64, noise: NoiseModel) -> Self {
        Self::new("mod-rosenbrock", dim, noise, move |x| {
            modified_rosenbrock(x, beta)
        })
    }

    pub fn asymmetric_quadratic(dim: usize, noise: NoiseModel) -> Self {
        Self::new("asym-quad", dim, noise, asymmetric_quadratic)
    }

    pub fn symmetric_quadratic(dim: usize, noise: NoiseModel) -> Self {
        Self::new("sym-quad", dim, noise, symmetric_quadratic)
    }

    pub fn anisotropic_gaussian(noise: NoiseModel) -> Self {
        Self::new("aniso-gauss", 2, noise, |x| {
            (-100.0 * x[0] * x[0] - x[1] * x[1]).exp()
        })
    }

    pub fn gaussian(shape: Matrix, center: Vec<f64>, noise: NoiseModel) -> Result<Self> {
        if shape.dim() != center.len() {
            return Err(Error::DimensionMismatch {
                expected: shape.dim(),
                got: center.len(),
            });
        }
        let dim = center.len();
        Ok(Self::new("gaussian", dim, noise, move |x| {
            gaussian_objective(x, &shape, &center)
        }))
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn noise(&self) -> NoiseModel {
        self.noise
    }

    pub fn true_f(&self, x: &[f64]) -> f64 {
        (self.f)(x)
    }

    pub fn reset_calls(&self) {
        self.calls.store(0, Ordering::Relaxed);
    }
}

impl fmt::Debug for NoisyObjective {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("NoisyObjective")
            .field("name", &self.name)
            .field("dim", &self.dim)
            .field("noise", &self.noise)
            .field("calls", &self.calls())
            .finish()
    }
}

impl Oracle for NoisyObjective {
    fn dim(&self) -> usize {
        self.dim
    }

    fn observe(&self, x: &[f64], rng: &mut RngStream) -> Result<f64> {
        if x.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: x.len(),
            });
        }
        let fx = (self.f)(x);
        let y = match self.noise {
            NoiseModel::None => fx,
            NoiseModel::AdditiveGaussian { sigma } => fx + sigma * rng.normal(),
            NoiseModel::Bernoulli => {
                if !(0.0..=1.0).contains(&fx) {
                    return Err(Error::ProbabilityOutOfRange { value: fx });
                }
                if rng.uniform() < fx {
                    1.0
                } else {
                    0.0
                }
            }
        };
        self.calls.fetch_add(1, Ordering::Relaxed);
        Ok(y)
    }

    fn true_value(&self, x: &[f64]) -> Option<f64> {
        Some((self.f)(x))
    }

    fn calls(&self) -> u64 {
        self.calls.load(Ordering::Relaxed)
    }
}

/// Names accepted on the command line and in config files.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ObjectiveKind {
    ModRosenbrock,
    AsymQuad,
    AnisoGauss,
    SymQuad,
    Gaussian,
}

impl ObjectiveKind {
    pub const ALL: [ObjectiveKind; 5] = [
        ObjectiveKind::ModRosenbrock,
        ObjectiveKind::AsymQuad,
        ObjectiveKind::AnisoGauss,
        ObjectiveKind::SymQuad,
        ObjectiveKind::Gaussian,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ObjectiveKind::ModRosenbrock => "mod-rosenbrock",
            ObjectiveKind::AsymQuad => "asym-quad",
            ObjectiveKind::AnisoGauss => "aniso-gauss",
            ObjectiveKind::SymQuad => "sym-quad",
            ObjectiveKind::Gaussian => "gaussian",
        }
    }

    /// Noiseless optimum value, where it is known in closed form.
    pub fn optimum(self, dim: usize) -> f64 {
        match self {
            ObjectiveKind::Gaussian => (2.0 * std::f64::consts::PI).powf(-(dim as f64) / 2.0),
            _ => 1.0,
        }
    }
}

impl fmt::Display for ObjectiveKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ObjectiveKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| crate::error::invalid("objective", format!("unknown objective `{s}`")))
    }
}

/// `exp(-β Σ_{i<D-1} [100 (x_{i+1} - x_i²)² + (1 - x_i)²])`, in `[0, 1]`.
pub fn modified_rosenbrock(x: &[f64], beta: f64) -> f64 {
    let sum: f64 = x
        .windows(2)
        .map(|w| 100.0 * (w[1] - w[0] * w[0]).powi(2) + (1.0 - w[0]).powi(2))
        .sum();
    (-beta * sum).exp()
}

/// `1 - (1/D) Σ (1 + 0.9 sign(x_i)) x_i²` with `sign(0) = 0`.
pub fn asymmetric_quadratic(x: &[f64]) -> f64 {
    let d = x.len() as f64;
    let sum: f64 = x
        .iter()
        .map(|&xi| {
            let s = if xi > 0.0 {
                1.0
            } else if xi < 0.0 {
                -1.0
            } else {
                0.0
            };
            (1.0 + 0.9 * s) * xi * xi
        })
        .sum();
    1.0 - sum / d
}

/// `exp(-100 x₀² - x₁²)`.
pub fn anisotropic_gaussian(x: &[f64]) -> Result<f64> {
    if x.len() != 2 {
        return Err(Error::DimensionMismatch {
            expected: 2,
            got: x.len(),
        });
    }
    Ok((-100.0 * x[0] * x[0] - x[1] * x[1]).exp())
}

/// Normalized Gaussian kernel `κ(M (x - x̄))`.
pub fn gaussian_objective(x: &[f64], shape: &Matrix, center: &[f64]) -> f64 {
    let d = x.len();
    let diff: Vec<f64> = x.iter().zip(center).map(|(a, b)| a - b).collect();
    let z = shape.mul_vec(&diff);
    let sq: f64 = z.iter().map(|v| v * v).sum();
    (2.0 * std::f64::consts::PI).powf(-(d as f64) / 2.0) * (-0.5 * sq).exp()
}

/// `1 - (1/D) Σ x_i²`.
pub fn symmetric_quadratic(x: &[f64]) -> f64 {
    1.0 - x.iter().map(|v| v * v).sum::<f64>() / x.len() as f64
}
