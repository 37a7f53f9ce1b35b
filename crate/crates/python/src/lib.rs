use anisotune::analysis::{self, AlignmentSetup};
use anisotune::cosolvers::generate_sk;
use anisotune::experiment::{self, AlgorithmKind, OptimizerSettings};
use anisotune::numeric::{Matrix, RngStream};
use anisotune::objectives::{NoiseModel, NoisyObjective, Oracle};
use anisotune::smoothing::estimate_anisotropic;
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::{PyBool, PyDict};
use serde_json::{Map, Value};

fn py_err(e: anisotune::Error) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn noise_model(noise: &str, sigma: f64) -> PyResult<NoiseModel> {
    match noise {
        "none" => Ok(NoiseModel::None),
        "bernoulli" => Ok(NoiseModel::Bernoulli),
        "gaussian" => Ok(NoiseModel::AdditiveGaussian { sigma }),
        other => Err(PyValueError::new_err(format!(
            "unknown noise `{other}`, expected none, bernoulli or gaussian"
        ))),
    }
}

fn matrix(rows: Vec<Vec<f64>>) -> PyResult<Matrix> {
    Matrix::from_rows(&rows).map_err(py_err)
}

/// Benchmark objective with a noise model.
#[pyclass(name = "Objective", module = "anisotune", frozen)]
struct PyObjective {
    inner: NoisyObjective,
}

#[pymethods]
impl PyObjective {
    #[staticmethod]
    #[pyo3(signature = (dim, beta = 0.5, noise = "bernoulli", sigma = 0.1))]
    fn modified_rosenbrock(dim: usize, beta: f64, noise: &str, sigma: f64) -> PyResult<Self> {
        Ok(Self {
            inner: NoisyObjective::modified_rosenbrock(dim, beta, noise_model(noise, sigma)?),
        })
    }

    #[staticmethod]
    #[pyo3(signature = (dim, noise = "gaussian", sigma = 0.1))]
    fn asymmetric_quadratic(dim: usize, noise: &str, sigma: f64) -> PyResult<Self> {
        Ok(Self {
            inner: NoisyObjective::asymmetric_quadratic(dim, noise_model(noise, sigma)?),
        })
    }

    #[staticmethod]
    #[pyo3(signature = (dim, noise = "none", sigma = 0.1))]
    fn symmetric_quadratic(dim: usize, noise: &str, sigma: f64) -> PyResult<Self> {
        Ok(Self {
            inner: NoisyObjective::symmetric_quadratic(dim, noise_model(noise, sigma)?),
        })
    }

    #[staticmethod]
    #[pyo3(signature = (noise = "bernoulli", sigma = 0.1))]
    fn anisotropic_gaussian(noise: &str, sigma: f64) -> PyResult<Self> {
        Ok(Self {
            inner: NoisyObjective::anisotropic_gaussian(noise_model(noise, sigma)?),
        })
    }

    #[getter]
    fn name(&self) -> String {
        self.inner.name().to_string()
    }

    #[getter]
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    /// Oracle calls made so far.
    #[getter]
    fn calls(&self) -> u64 {
        self.inner.calls()
    }

    fn true_value(&self, x: Vec<f64>) -> PyResult<f64> {
        if x.len() != self.inner.dim() {
            return Err(PyValueError::new_err(format!(
                "expected {} coordinates, got {}",
                self.inner.dim(),
                x.len()
            )));
        }
        Ok(self.inner.true_f(&x))
    }

    fn observe(&self, x: Vec<f64>, seed: u64) -> PyResult<f64> {
        self.inner.observe(&x, &mut RngStream::new(seed)).map_err(py_err)
    }

    fn __repr__(&self) -> String {
        format!("Objective({:?})", self.inner)
    }
}

fn settings_map(settings: Option<&Bound<'_, PyDict>>) -> PyResult<Map<String, Value>> {
    let mut out = Map::new();
    let Some(d) = settings else {
        return Ok(out);
    };
    for (k, v) in d.iter() {
        let key: String = k.extract()?;
        let value = if v.is_instance_of::<PyBool>() {
            Value::from(v.extract::<bool>()?)
        } else if let Ok(n) = v.extract::<u64>() {
            Value::from(n)
        } else if let Ok(x) = v.extract::<f64>() {
            Value::from(x)
        } else {
            return Err(PyValueError::new_err(format!("setting `{key}` must be a number or bool")));
        };
        out.insert(key, value);
    }
    Ok(out)
}

/// Run one optimizer on `objective` from `x0`.
///
/// `algorithm` is one of das, dis, fixed-window, spsa; `settings` overrides
/// individual fields by name. Returns a dict with `x_final`, `samples`,
/// `window` and the per-step trace columns.
#[pyfunction]
#[pyo3(signature = (objective, algorithm, x0, budget, seed, settings = None))]
fn optimize<'py>(
    py: Python<'py>,
    objective: &PyObjective,
    algorithm: &str,
    x0: Vec<f64>,
    budget: u64,
    seed: u64,
    settings: Option<&Bound<'py, PyDict>>,
) -> PyResult<Bound<'py, PyDict>> {
    let alg: AlgorithmKind = algorithm.parse().map_err(py_err)?;
    let opt = OptimizerSettings::defaults(alg, x0.len())
        .with_overrides(&settings_map(settings)?)
        .map_err(py_err)?;
    let obj = &objective.inner;
    let out = py
        .detach(|| opt.run(x0, budget, obj, &RngStream::new(seed)))
        .map_err(py_err)?;
    let d = PyDict::new(py);
    d.set_item("samples", out.trace.samples_used())?;
    d.set_item("fitness", obj.true_f(&out.x_final))?;
    d.set_item("x_final", out.x_final)?;
    d.set_item("window", out.window.to_rows())?;
    let recs = &out.trace.records;
    d.set_item("n_s", recs.iter().map(|r| r.n_s).collect::<Vec<_>>())?;
    d.set_item("trace_fitness", recs.iter().map(|r| r.fitness).collect::<Vec<_>>())?;
    d.set_item("window_norm", recs.iter().map(|r| r.window_norm).collect::<Vec<_>>())?;
    Ok(d)
}

/// Anisotropic smoothing gradient estimate `(gx, gL)` from `batch` samples.
#[pyfunction]
fn gradient_estimate(
    objective: &PyObjective,
    x: Vec<f64>,
    l: Vec<Vec<f64>>,
    batch: usize,
    seed: u64,
) -> PyResult<(Vec<f64>, Vec<Vec<f64>>)> {
    let l = matrix(l)?;
    let est = estimate_anisotropic(&objective.inner, &x, &l, batch, &RngStream::new(seed)).map_err(py_err)?;
    Ok((est.gx, est.gl.to_rows()))
}

/// Gradient-estimation error over kernel rotations, one dict per angle.
#[pyfunction]
#[pyo3(signature = (theta_deg, theta0_deg, draws = 0, seed = 0, hessian_eigs = (1.0, 4.0), kernel_eigs = (0.01, 0.04)))]
fn alignment_scan<'py>(
    py: Python<'py>,
    theta_deg: Vec<f64>,
    theta0_deg: f64,
    draws: u64,
    seed: u64,
    hessian_eigs: (f64, f64),
    kernel_eigs: (f64, f64),
) -> PyResult<Vec<Bound<'py, PyDict>>> {
    let setup = AlignmentSetup {
        hessian_eigs,
        kernel_eigs,
        theta0: theta0_deg.to_radians(),
        empirical_draws: draws,
    };
    let grid: Vec<f64> = theta_deg.iter().map(|d| d.to_radians()).collect();
    let points = py
        .detach(|| analysis::alignment_scan(&grid, &setup, &RngStream::new(seed)))
        .map_err(py_err)?;
    points
        .iter()
        .zip(&theta_deg)
        .map(|(p, deg)| {
            let d = PyDict::new(py);
            d.set_item("theta_deg", deg)?;
            d.set_item("exact", p.exact)?;
            d.set_item("approx", p.approx)?;
            d.set_item("empirical", p.empirical)?;
            Ok(d)
        })
        .collect()
}

/// `(c, slope)` of `ε ≈ c D n_s^slope` over the final decade of points.
#[pyfunction]
fn fit_convergence(points: Vec<(f64, f64)>, dim: usize) -> PyResult<(f64, f64)> {
    analysis::fit_convergence(&points, dim).map_err(py_err)
}

/// Exact ground state `(energy, spins)` of a seeded SK instance.
#[pyfunction]
fn sk_ground_state(n: usize, seed: u64) -> PyResult<(f64, Vec<f64>)> {
    let inst = generate_sk(n, &mut RngStream::new(seed)).map_err(py_err)?;
    inst.brute_force_ground_state().map_err(py_err)
}

/// Parse and run an experiment config (JSON text). Returns the summary JSON;
/// traces and the summary are also written when `out_dir` is given.
#[pyfunction]
#[pyo3(signature = (config, out_dir = None))]
fn run_experiment(py: Python<'_>, config: &str, out_dir: Option<std::path::PathBuf>) -> PyResult<String> {
    let cfg = experiment::parse_config(config).map_err(py_err)?;
    let out = py.detach(|| experiment::run_experiment(&cfg)).map_err(py_err)?;
    if let Some(dir) = out_dir {
        experiment::write_outputs(&out, &dir).map_err(py_err)?;
    }
    Ok(experiment::summary_json(&out).to_string())
}

#[pymodule]
#[pyo3(name = "anisotune")]
fn anisotune_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    m.add_class::<PyObjective>()?;
    m.add_function(wrap_pyfunction!(optimize, m)?)?;
    m.add_function(wrap_pyfunction!(gradient_estimate, m)?)?;
    m.add_function(wrap_pyfunction!(alignment_scan, m)?)?;
    m.add_function(wrap_pyfunction!(fit_convergence, m)?)?;
    m.add_function(wrap_pyfunction!(sk_ground_state, m)?)?;
    m.add_function(wrap_pyfunction!(run_experiment, m)?)?;
    Ok(())
}
