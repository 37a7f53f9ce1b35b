use std::path::PathBuf;

use serde_json::{Map, Value};

use super::{AlgorithmKind, ExperimentConfig, ExperimentKind, OptimizerSettings, Problem, Start};
use crate::cosolvers::SuccessMode;
use crate::error::{Error, Result};
use crate::objectives::{NoiseModel, ObjectiveKind};

const TOP_KEYS: &[&str] = &[
    "kind",
    "algorithm",
    "optimizer",
    "problem",
    "start",
    "seeds",
    "budget",
    "checkpoints",
    "output",
];

/// Parse a JSON experiment config, filling every unset field with the
/// defaults of its kind. All problems found are reported together.
pub fn parse_config(text: &str) -> Result<ExperimentConfig> {
    let value: Value = serde_json::from_str(text).map_err(|e| Error::Config {
        issues: vec![format!("json: {e}")],
    })?;
    parse_config_value(&value)
}

pub fn parse_config_value(value: &Value) -> Result<ExperimentConfig> {
    let mut cx = Cx::default();
    let Some(top) = value.as_object() else {
        return Err(Error::Config {
            issues: vec!["config: expected a JSON object".into()],
        });
    };
    cx.known_keys(top, "", TOP_KEYS);
    let kind = match top.get("kind") {
        None => {
            cx.push("kind", "missing");
            None
        }
        Some(v) => cx.string("kind", v).and_then(|s| match s.parse::<ExperimentKind>() {
            Ok(k) => Some(k),
            Err(_) => {
                let names: Vec<&str> = ExperimentKind::ALL.iter().map(|k| k.as_str()).collect();
                cx.push("kind", format!("unknown kind `{s}`, expected one of {}", names.join(", ")));
                None
            }
        }),
    };
    let Some(kind) = kind else {
        return Err(cx.into_error());
    };

    let problem = parse_problem(kind, top.get("problem"), &mut cx);
    let dim = problem.as_ref().map(Problem::dim);

    let optimizer = if kind.takes_algorithm() {
        dim.and_then(|d| parse_optimizer(kind, top.get("algorithm"), top.get("optimizer"), d, &mut cx))
    } else {
        for key in ["algorithm", "optimizer"] {
            if top.contains_key(key) {
                cx.push(key, format!("not used by `{kind}`"));
            }
        }
        None
    };

    let start = if kind == ExperimentKind::Alignment {
        if top.contains_key("start") {
            cx.push("start", "not used by `alignment`");
        }
        None
    } else {
        match (&problem, top.get("start")) {
            (Some(p), Some(v)) => parse_start(v, p.dim(), &mut cx),
            (Some(p), None) => Some(default_start(p)),
            (None, _) => None,
        }
    };

    let seeds = match top.get("seeds") {
        None => default_seeds(kind),
        Some(v) => cx.uint_array("seeds", v).unwrap_or_default(),
    };
    let budget = match top.get("budget") {
        None => default_budget(kind),
        Some(v) => cx.uint("budget", v).unwrap_or(1),
    };
    let checkpoints = if kind.is_tuning() {
        match top.get("checkpoints") {
            None => vec![0, budget],
            Some(v) => cx.uint_array("checkpoints", v).unwrap_or_default(),
        }
    } else {
        if top.contains_key("checkpoints") {
            cx.push("checkpoints", "only used by the tuning kinds");
        }
        Vec::new()
    };
    let output = match top.get("output") {
        None => PathBuf::from(format!("results/{kind}")),
        Some(v) => cx.string("output", v).map(PathBuf::from).unwrap_or_default(),
    };

    let Some(problem) = problem else {
        return Err(cx.into_error());
    };
    let cfg = ExperimentConfig {
        kind,
        problem,
        optimizer,
        start,
        seeds,
        budget,
        checkpoints,
        output,
    };
    if let Err(Error::Config { issues }) = cfg.validate() {
        cx.issues.extend(issues);
    }
    if cx.issues.is_empty() {
        Ok(cfg)
    } else {
        Err(cx.into_error())
    }
}

fn default_seeds(kind: ExperimentKind) -> Vec<u64> {
    match kind {
        ExperimentKind::Alignment => vec![1],
        ExperimentKind::TuneSat | ExperimentKind::TuneIsing | ExperimentKind::Eigenratio => vec![1, 2, 3],
        _ => vec![1, 2, 3, 4, 5],
    }
}

fn default_budget(kind: ExperimentKind) -> u64 {
    match kind {
        ExperimentKind::Rosenbrock | ExperimentKind::Artificial | ExperimentKind::Eigenratio => 100_000,
        ExperimentKind::Convergence | ExperimentKind::Alignment => 1_000_000,
        ExperimentKind::TuneSat => 20_000,
        ExperimentKind::TuneIsing => 10_000,
    }
}

fn default_start(problem: &Problem) -> Start {
    let d = problem.dim();
    let (low, high) = match problem {
        Problem::Rosenbrock { .. } | Problem::Eigenratio { .. } => (vec![0.0; d], vec![1.0; d]),
        Problem::Artificial {
            objective: ObjectiveKind::AnisoGauss,
            ..
        } => (vec![-0.1, 1.0], vec![0.1, 2.0]),
        Problem::Artificial { .. } => (vec![-1.0; d], vec![1.0; d]),
        Problem::Sat { .. } | Problem::Ising { .. } => (vec![0.01, -1.0, 0.0, 0.05], vec![0.1, 0.0, 1.0, 0.5]),
        Problem::Alignment { .. } => (vec![0.0; d], vec![0.0; d]),
    };
    Start::Uniform { low, high }
}

fn parse_problem(kind: ExperimentKind, value: Option<&Value>, cx: &mut Cx) -> Option<Problem> {
    let empty = Map::new();
    let m = match value {
        None => &empty,
        Some(Value::Object(m)) => m,
        Some(_) => {
            cx.push("problem", "expected an object");
            return None;
        }
    };
    let before = cx.issues.len();
    let problem = match kind {
        ExperimentKind::Rosenbrock => {
            cx.known_keys(m, "problem", &["dim", "beta", "noise", "sigma"]);
            let dim = cx.opt_uint(m, "problem", "dim").unwrap_or(4) as usize;
            if dim < 2 {
                cx.push("problem.dim", "need dim >= 2");
            }
            let beta = cx.opt_num(m, "problem", "beta").unwrap_or(0.5);
            if beta <= 0.0 {
                cx.push("problem.beta", "must be > 0");
            }
            let noise = parse_noise(m, NoiseModel::Bernoulli, cx);
            Problem::Rosenbrock { dim, beta, noise }
        }
        ExperimentKind::Artificial | ExperimentKind::Convergence => {
            cx.known_keys(m, "problem", &["objective", "dim", "noise", "sigma"]);
            let objective = match m.get("objective") {
                None => ObjectiveKind::AsymQuad,
                Some(v) => match cx.string("problem.objective", v).map(|s| s.parse::<ObjectiveKind>()) {
                    Some(Ok(o @ (ObjectiveKind::AsymQuad | ObjectiveKind::SymQuad | ObjectiveKind::AnisoGauss))) => o,
                    Some(_) => {
                        cx.push("problem.objective", "expected one of asym-quad, sym-quad, aniso-gauss");
                        ObjectiveKind::AsymQuad
                    }
                    None => ObjectiveKind::AsymQuad,
                },
            };
            let (dim, noise) = if objective == ObjectiveKind::AnisoGauss {
                if let Some(d) = cx.opt_uint(m, "problem", "dim") {
                    if d != 2 {
                        cx.push("problem.dim", "aniso-gauss is two-dimensional");
                    }
                }
                (2, parse_noise(m, NoiseModel::Bernoulli, cx))
            } else {
                let dim = cx.opt_uint(m, "problem", "dim").unwrap_or(5) as usize;
                if dim == 0 {
                    cx.push("problem.dim", "need dim >= 1");
                }
                let noise = parse_noise(m, NoiseModel::AdditiveGaussian { sigma: 0.1 }, cx);
                if noise == NoiseModel::Bernoulli {
                    cx.push("problem.noise", format!("{objective} can leave [0, 1], bernoulli noise is undefined"));
                }
                (dim, noise)
            };
            Problem::Artificial { objective, dim, noise }
        }
        ExperimentKind::TuneSat => {
            cx.known_keys(m, "problem", &["n", "alpha", "steps", "success"]);
            let n = cx.opt_uint(m, "problem", "n").unwrap_or(50) as usize;
            if n < 3 {
                cx.push("problem.n", "need n >= 3");
            }
            let alpha = cx.opt_num(m, "problem", "alpha").unwrap_or(4.0);
            if alpha < 0.0 {
                cx.push("problem.alpha", "must be >= 0");
            }
            let steps = cx.opt_uint(m, "problem", "steps").unwrap_or(100);
            if steps == 0 {
                cx.push("problem.steps", "need steps >= 1");
            }
            let success = match m.get("success") {
                None => SuccessMode::AnyStep,
                Some(v) => match cx.string("problem.success", v) {
                    Some("any-step") => SuccessMode::AnyStep,
                    Some("final-step") => SuccessMode::FinalStep,
                    Some(_) => {
                        cx.push("problem.success", "expected any-step or final-step");
                        SuccessMode::AnyStep
                    }
                    None => SuccessMode::AnyStep,
                },
            };
            Problem::Sat { n, alpha, steps, success }
        }
        ExperimentKind::TuneIsing => {
            cx.known_keys(m, "problem", &["n", "beta_e", "steps"]);
            let n = cx.opt_uint(m, "problem", "n").unwrap_or(15) as usize;
            if n < 2 {
                cx.push("problem.n", "need n >= 2");
            }
            let beta_e = cx.opt_num(m, "problem", "beta_e").unwrap_or(1.0);
            if beta_e < 0.0 {
                cx.push("problem.beta_e", "must be >= 0");
            }
            let steps = cx.opt_uint(m, "problem", "steps").unwrap_or(200);
            if steps == 0 {
                cx.push("problem.steps", "need steps >= 1");
            }
            Problem::Ising { n, beta_e, steps }
        }
        ExperimentKind::Alignment => {
            cx.known_keys(
                m,
                "problem",
                &["hessian_eigs", "kernel_eigs", "theta0_deg", "grid_step_deg"],
            );
            let hessian_eigs = cx.opt_pair(m, "problem", "hessian_eigs").unwrap_or([1.0, 4.0]);
            let kernel_eigs = cx.opt_pair(m, "problem", "kernel_eigs").unwrap_or([0.01, 0.04]);
            let theta0_deg = cx.opt_num(m, "problem", "theta0_deg").unwrap_or(30.0);
            let grid_step_deg = cx.opt_num(m, "problem", "grid_step_deg").unwrap_or(5.0);
            if !(grid_step_deg > 0.0 && grid_step_deg <= 180.0) {
                cx.push("problem.grid_step_deg", "must be in (0, 180]");
            }
            for (name, eigs) in [("hessian_eigs", hessian_eigs), ("kernel_eigs", kernel_eigs)] {
                if eigs.iter().any(|&e| e <= 0.0) {
                    cx.push(&format!("problem.{name}"), "eigenvalues must be > 0");
                }
            }
            Problem::Alignment {
                hessian_eigs,
                kernel_eigs,
                theta0_deg,
                grid_step_deg,
            }
        }
        ExperimentKind::Eigenratio => {
            cx.known_keys(m, "problem", &["ratio", "theta0_deg", "lambda", "w_init"]);
            let ratio = cx.opt_num(m, "problem", "ratio").unwrap_or(4.0);
            let theta0_deg = cx.opt_num(m, "problem", "theta0_deg").unwrap_or(20.0);
            let lambda = cx.opt_num(m, "problem", "lambda").unwrap_or(0.1);
            let w_init = cx.opt_num(m, "problem", "w_init").unwrap_or(0.5);
            for (name, v) in [("ratio", ratio), ("lambda", lambda), ("w_init", w_init)] {
                if v <= 0.0 {
                    cx.push(&format!("problem.{name}"), "must be > 0");
                }
            }
            Problem::Eigenratio {
                ratio,
                theta0_deg,
                lambda,
                w_init,
            }
        }
    };
    (cx.issues.len() == before).then_some(problem)
}

fn parse_noise(m: &Map<String, Value>, default: NoiseModel, cx: &mut Cx) -> NoiseModel {
    let sigma = cx.opt_num(m, "problem", "sigma");
    let noise = match m.get("noise") {
        None => default,
        Some(v) => match cx.string("problem.noise", v) {
            Some("none") => NoiseModel::None,
            Some("bernoulli") => NoiseModel::Bernoulli,
            Some("gaussian") => NoiseModel::AdditiveGaussian { sigma: 0.1 },
            Some(_) => {
                cx.push("problem.noise", "expected none, bernoulli or gaussian");
                default
            }
            None => default,
        },
    };
    match (noise, sigma) {
        (NoiseModel::AdditiveGaussian { .. }, Some(s)) => {
            if s <= 0.0 {
                cx.push("problem.sigma", "must be > 0");
            }
            NoiseModel::AdditiveGaussian { sigma: s }
        }
        (_, Some(_)) => {
            cx.push("problem.sigma", "only used with gaussian noise");
            noise
        }
        (_, None) => noise,
    }
}

fn parse_optimizer(
    kind: ExperimentKind,
    algorithm: Option<&Value>,
    overrides: Option<&Value>,
    dim: usize,
    cx: &mut Cx,
) -> Option<OptimizerSettings> {
    let alg = match algorithm {
        None => AlgorithmKind::Das,
        Some(v) => match cx.string("algorithm", v)?.parse::<AlgorithmKind>() {
            Ok(a) => a,
            Err(_) => {
                let names: Vec<&str> = AlgorithmKind::ALL.iter().map(|k| k.as_str()).collect();
                cx.push("algorithm", format!("expected one of {}", names.join(", ")));
                return None;
            }
        },
    };
    let base = OptimizerSettings::preset(kind, alg, dim);
    let Some(overrides) = overrides else {
        return Some(base);
    };
    let Some(over) = overrides.as_object() else {
        cx.push("optimizer", "expected an object");
        return None;
    };
    match base.with_overrides(over) {
        Ok(s) => Some(s),
        Err(Error::Config { issues }) => {
            cx.issues.extend(issues);
            None
        }
        Err(e) => {
            cx.push("optimizer", e);
            None
        }
    }
}

fn parse_start(value: &Value, dim: usize, cx: &mut Cx) -> Option<Start> {
    let Some(m) = value.as_object() else {
        cx.push("start", "expected an object");
        return None;
    };
    cx.known_keys(m, "start", &["x0", "low", "high"]);
    let sized = |cx: &mut Cx, key: &str| -> Option<Vec<f64>> {
        let path = format!("start.{key}");
        let v = cx.num_array(&path, m.get(key)?)?;
        if v.len() != dim {
            cx.push(&path, format!("expected {dim} coordinates, got {}", v.len()));
            return None;
        }
        Some(v)
    };
    match (m.contains_key("x0"), m.contains_key("low") || m.contains_key("high")) {
        (true, false) => sized(cx, "x0").map(Start::Fixed),
        (false, true) => {
            let low = sized(cx, "low");
            let high = sized(cx, "high");
            if m.contains_key("low") != m.contains_key("high") {
                cx.push("start", "give both low and high");
            }
            let (low, high) = (low?, high?);
            if low.iter().zip(&high).any(|(a, b)| a > b) {
                cx.push("start", "low must not exceed high");
                return None;
            }
            Some(Start::Uniform { low, high })
        }
        _ => {
            cx.push("start", "give either x0 or low and high");
            None
        }
    }
}

#[derive(Default)]
struct Cx {
    issues: Vec<String>,
}

impl Cx {
    fn push(&mut self, path: &str, msg: impl std::fmt::Display) {
        self.issues.push(format!("{path}: {msg}"));
    }

    fn into_error(self) -> Error {
        Error::Config { issues: self.issues }
    }

    fn known_keys(&mut self, m: &Map<String, Value>, prefix: &str, allowed: &[&str]) {
        for key in m.keys() {
            if !allowed.contains(&key.as_str()) {
                let path = if prefix.is_empty() {
                    key.clone()
                } else {
                    format!("{prefix}.{key}")
                };
                self.push(&path, "unknown key");
            }
        }
    }

    fn string<'a>(&mut self, path: &str, v: &'a Value) -> Option<&'a str> {
        let s = v.as_str();
        if s.is_none() {
            self.push(path, "expected a string");
        }
        s
    }

    fn num(&mut self, path: &str, v: &Value) -> Option<f64> {
        match v.as_f64() {
            Some(x) if x.is_finite() => Some(x),
            _ => {
                self.push(path, "expected a finite number");
                None
            }
        }
    }

    /// Non-negative integer; integral floats such as `1e5` are accepted.
    fn uint(&mut self, path: &str, v: &Value) -> Option<u64> {
        if let Some(n) = v.as_u64() {
            return Some(n);
        }
        match v.as_f64() {
            Some(x) if x >= 0.0 && x.fract() == 0.0 && x <= 9.007_199_254_740_992e15 => Some(x as u64),
            _ => {
                self.push(path, "expected a non-negative integer");
                None
            }
        }
    }

    fn opt_num(&mut self, m: &Map<String, Value>, prefix: &str, key: &str) -> Option<f64> {
        let v = m.get(key)?;
        self.num(&format!("{prefix}.{key}"), v)
    }

    fn opt_uint(&mut self, m: &Map<String, Value>, prefix: &str, key: &str) -> Option<u64> {
        let v = m.get(key)?;
        self.uint(&format!("{prefix}.{key}"), v)
    }

    fn opt_pair(&mut self, m: &Map<String, Value>, prefix: &str, key: &str) -> Option<[f64; 2]> {
        let path = format!("{prefix}.{key}");
        let v = self.num_array(&path, m.get(key)?)?;
        match v.as_slice() {
            &[a, b] => Some([a, b]),
            _ => {
                self.push(&path, "expected two numbers");
                None
            }
        }
    }

    fn num_array(&mut self, path: &str, v: &Value) -> Option<Vec<f64>> {
        let Some(items) = v.as_array() else {
            self.push(path, "expected an array of numbers");
            return None;
        };
        let before = self.issues.len();
        let out: Vec<f64> = items
            .iter()
            .enumerate()
            .filter_map(|(i, x)| self.num(&format!("{path}[{i}]"), x))
            .collect();
        (self.issues.len() == before).then_some(out)
    }

    fn uint_array(&mut self, path: &str, v: &Value) -> Option<Vec<u64>> {
        let Some(items) = v.as_array() else {
            self.push(path, "expected an array of integers");
            return None;
        };
        let before = self.issues.len();
        let out: Vec<u64> = items
            .iter()
            .enumerate()
            .filter_map(|(i, x)| self.uint(&format!("{path}[{i}]"), x))
            .collect();
        (self.issues.len() == before).then_some(out)
    }
}
