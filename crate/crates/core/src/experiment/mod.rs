//! Seeded experiment suites: JSON configs, per-seed runs, CSV traces and a
//! JSON summary per suite.

mod format;
mod parse;
mod run;

pub use format::{format_g9, render_csv};
pub use parse::{parse_config, parse_config_value};
pub use run::{run_experiment, summary_json, write_outputs, ExperimentOutput, RunSummary, SeedResult, Table};

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use serde_json::{json, Map, Value};

use crate::cosolvers::SuccessMode;
use crate::error::{invalid, Error, Result};
use crate::numeric::RngStream;
use crate::objectives::{NoiseModel, ObjectiveKind, Oracle};
use crate::optimizers::{
    das_run, dis_run, fixed_window_run, spsa_run, DasConfig, DisConfig, FixedWindowConfig, RunOutput, SpsaConfig,
};

pub const VERSION: &str = concat!(env!("CARGO_PKG_NAME"), " ", env!("CARGO_PKG_VERSION"));

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ExperimentKind {
    Rosenbrock,
    Artificial,
    TuneSat,
    TuneIsing,
    Alignment,
    Eigenratio,
    Convergence,
}

impl ExperimentKind {
    pub const ALL: [ExperimentKind; 7] = [
        ExperimentKind::Rosenbrock,
        ExperimentKind::Artificial,
        ExperimentKind::TuneSat,
        ExperimentKind::TuneIsing,
        ExperimentKind::Alignment,
        ExperimentKind::Eigenratio,
        ExperimentKind::Convergence,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ExperimentKind::Rosenbrock => "rosenbrock",
            ExperimentKind::Artificial => "artificial",
            ExperimentKind::TuneSat => "tune-sat",
            ExperimentKind::TuneIsing => "tune-ising",
            ExperimentKind::Alignment => "alignment",
            ExperimentKind::Eigenratio => "eigenratio",
            ExperimentKind::Convergence => "convergence",
        }
    }

    /// Kinds driven by a choice of optimizer.
    pub fn takes_algorithm(self) -> bool {
        !matches!(self, ExperimentKind::Alignment | ExperimentKind::Eigenratio)
    }

    pub fn is_tuning(self) -> bool {
        matches!(self, ExperimentKind::TuneSat | ExperimentKind::TuneIsing)
    }
}

impl fmt::Display for ExperimentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ExperimentKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| invalid("kind", format!("unknown experiment kind `{s}`")))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum AlgorithmKind {
    Das,
    Dis,
    FixedWindow,
    Spsa,
}

impl AlgorithmKind {
    pub const ALL: [AlgorithmKind; 4] = [
        AlgorithmKind::Das,
        AlgorithmKind::Dis,
        AlgorithmKind::FixedWindow,
        AlgorithmKind::Spsa,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            AlgorithmKind::Das => "das",
            AlgorithmKind::Dis => "dis",
            AlgorithmKind::FixedWindow => "fixed-window",
            AlgorithmKind::Spsa => "spsa",
        }
    }
}

impl fmt::Display for AlgorithmKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for AlgorithmKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| invalid("algorithm", format!("unknown algorithm `{s}`")))
    }
}

/// A fully resolved optimizer. `x0` and `budget` inside are placeholders;
/// the experiment supplies both per seed.
#[derive(Clone, Debug, PartialEq)]
pub enum OptimizerSettings {
    Das(DasConfig),
    Dis(DisConfig),
    FixedWindow(FixedWindowConfig),
    Spsa(SpsaConfig),
}

impl OptimizerSettings {
    /// Library defaults for dimension `dim`.
    pub fn defaults(kind: AlgorithmKind, dim: usize) -> Self {
        let x0 = vec![0.0; dim];
        match kind {
            AlgorithmKind::Das => OptimizerSettings::Das(DasConfig::new(x0, 1)),
            AlgorithmKind::Dis => OptimizerSettings::Dis(DisConfig::new(x0, 1)),
            AlgorithmKind::FixedWindow => OptimizerSettings::FixedWindow(FixedWindowConfig::new(x0, 0.25, 1)),
            AlgorithmKind::Spsa => OptimizerSettings::Spsa(SpsaConfig::new(x0, 1)),
        }
    }

    /// Defaults for `kind` as used by experiment `exp`.
    pub fn preset(exp: ExperimentKind, kind: AlgorithmKind, dim: usize) -> Self {
        let mut s = Self::defaults(kind, dim);
        match (&mut s, exp) {
            (OptimizerSettings::Das(c), ExperimentKind::Rosenbrock) => {
                c.dt = 5.0;
                c.kappa = 1.0;
                c.w_min = 0.08;
            }
            (OptimizerSettings::Das(c), ExperimentKind::Convergence) => c.kappa = 1.0,
            (OptimizerSettings::Dis(c), ExperimentKind::Convergence) => c.kappa = 1.0,
            (OptimizerSettings::Das(c), ExperimentKind::TuneSat | ExperimentKind::TuneIsing) => c.w_init = 0.1,
            (OptimizerSettings::Dis(c), ExperimentKind::TuneSat | ExperimentKind::TuneIsing) => c.w_init = 0.1,
            (OptimizerSettings::FixedWindow(c), ExperimentKind::TuneSat | ExperimentKind::TuneIsing) => c.w = 0.1,
            (OptimizerSettings::Spsa(c), ExperimentKind::TuneSat | ExperimentKind::TuneIsing) => c.c = 0.02,
            _ => {}
        }
        s
    }

    pub fn kind(&self) -> AlgorithmKind {
        match self {
            OptimizerSettings::Das(_) => AlgorithmKind::Das,
            OptimizerSettings::Dis(_) => AlgorithmKind::Dis,
            OptimizerSettings::FixedWindow(_) => AlgorithmKind::FixedWindow,
            OptimizerSettings::Spsa(_) => AlgorithmKind::Spsa,
        }
    }

    /// Window norm before the first step.
    pub fn initial_window_norm(&self, dim: usize) -> f64 {
        let root_d = (dim as f64).sqrt();
        match self {
            OptimizerSettings::Das(c) => c.w_init * root_d,
            OptimizerSettings::Dis(c) => c.w_init * root_d,
            OptimizerSettings::FixedWindow(c) => c.w * root_d,
            OptimizerSettings::Spsa(c) => c.gains(0).1 * root_d,
        }
    }

    fn with_start(&self, x0: Vec<f64>, budget: u64) -> Self {
        let mut s = self.clone();
        match &mut s {
            OptimizerSettings::Das(c) => (c.x0, c.budget) = (x0, budget),
            OptimizerSettings::Dis(c) => (c.x0, c.budget) = (x0, budget),
            OptimizerSettings::FixedWindow(c) => (c.x0, c.budget) = (x0, budget),
            OptimizerSettings::Spsa(c) => (c.x0, c.budget) = (x0, budget),
        }
        s
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            OptimizerSettings::Das(c) => c.validate(),
            OptimizerSettings::Dis(c) => c.validate(),
            OptimizerSettings::FixedWindow(c) => c.validate(),
            OptimizerSettings::Spsa(c) => c.validate(),
        }
    }

    pub fn run(&self, x0: Vec<f64>, budget: u64, obj: &dyn Oracle, rng: &RngStream) -> Result<RunOutput> {
        match self.with_start(x0, budget) {
            OptimizerSettings::Das(c) => das_run(&c, obj, rng),
            OptimizerSettings::Dis(c) => dis_run(&c, obj, rng),
            OptimizerSettings::FixedWindow(c) => fixed_window_run(&c, obj, rng),
            OptimizerSettings::Spsa(c) => spsa_run(&c, obj, rng),
        }
    }

    /// Replace individual settings by name, as in the `optimizer` block of a
    /// config. Each bad key is reported as `optimizer.<key>: ...`.
    pub fn with_overrides(&self, over: &Map<String, Value>) -> Result<Self> {
        let dim = self.dim();
        let alg = self.kind();
        let mut merged = self.to_json();
        let fields = merged.as_object_mut().expect("config object");
        let mut issues = Vec::new();
        for (key, v) in over {
            let Some(slot) = fields.get_mut(key) else {
                issues.push(format!("optimizer.{key}: unknown setting for {alg}"));
                continue;
            };
            let parsed = if slot.is_boolean() {
                v.as_bool().map(Value::from).ok_or("expected true or false")
            } else if slot.is_u64() {
                v.as_u64()
                    .or_else(|| v.as_f64().filter(|x| *x >= 0.0 && x.fract() == 0.0).map(|x| x as u64))
                    .map(Value::from)
                    .ok_or("expected a non-negative integer")
            } else {
                v.as_f64()
                    .filter(|x| x.is_finite())
                    .map(Value::from)
                    .ok_or("expected a finite number")
            };
            match parsed {
                Ok(p) => *slot = p,
                Err(msg) => issues.push(format!("optimizer.{key}: {msg}")),
            }
        }
        if !issues.is_empty() {
            return Err(Error::Config { issues });
        }
        fields.insert("x0".into(), vec![0.0; dim].into());
        fields.insert("budget".into(), 1.into());
        let parsed = match alg {
            AlgorithmKind::Das => serde_json::from_value(merged).map(OptimizerSettings::Das),
            AlgorithmKind::Dis => serde_json::from_value(merged).map(OptimizerSettings::Dis),
            AlgorithmKind::FixedWindow => serde_json::from_value(merged).map(OptimizerSettings::FixedWindow),
            AlgorithmKind::Spsa => serde_json::from_value(merged).map(OptimizerSettings::Spsa),
        };
        parsed.map_err(|e| Error::Config {
            issues: vec![format!("optimizer: {e}")],
        })
    }

    fn dim(&self) -> usize {
        match self {
            OptimizerSettings::Das(c) => c.x0.len(),
            OptimizerSettings::Dis(c) => c.x0.len(),
            OptimizerSettings::FixedWindow(c) => c.x0.len(),
            OptimizerSettings::Spsa(c) => c.x0.len(),
        }
    }

    /// Settings without `x0` and `budget`.
    pub fn to_json(&self) -> Value {
        let v = match self {
            OptimizerSettings::Das(c) => serde_json::to_value(c),
            OptimizerSettings::Dis(c) => serde_json::to_value(c),
            OptimizerSettings::FixedWindow(c) => serde_json::to_value(c),
            OptimizerSettings::Spsa(c) => serde_json::to_value(c),
        };
        let mut v = v.expect("plain config serializes");
        if let Some(m) = v.as_object_mut() {
            m.remove("x0");
            m.remove("budget");
        }
        v
    }
}

/// How each seed picks its starting point.
#[derive(Clone, Debug, PartialEq)]
pub enum Start {
    Fixed(Vec<f64>),
    /// Independent uniform draws per coordinate, in order, from the seed's root stream.
    Uniform { low: Vec<f64>, high: Vec<f64> },
}

impl Start {
    pub fn dim(&self) -> usize {
        match self {
            Start::Fixed(x) => x.len(),
            Start::Uniform { low, .. } => low.len(),
        }
    }

    pub fn draw(&self, seed: u64) -> Vec<f64> {
        match self {
            Start::Fixed(x) => x.clone(),
            Start::Uniform { low, high } => {
                let mut rng = RngStream::new(seed);
                low.iter().zip(high).map(|(lo, hi)| lo + (hi - lo) * rng.uniform()).collect()
            }
        }
    }

    fn to_json(&self) -> Value {
        match self {
            Start::Fixed(x) => json!({ "x0": x }),
            Start::Uniform { low, high } => json!({ "low": low, "high": high }),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Problem {
    Rosenbrock {
        dim: usize,
        beta: f64,
        noise: NoiseModel,
    },
    /// Also used by the convergence kind.
    Artificial {
        objective: ObjectiveKind,
        dim: usize,
        noise: NoiseModel,
    },
    Sat {
        n: usize,
        alpha: f64,
        steps: u64,
        success: SuccessMode,
    },
    Ising {
        n: usize,
        beta_e: f64,
        steps: u64,
    },
    Alignment {
        hessian_eigs: [f64; 2],
        kernel_eigs: [f64; 2],
        theta0_deg: f64,
        grid_step_deg: f64,
    },
    Eigenratio {
        ratio: f64,
        theta0_deg: f64,
        lambda: f64,
        w_init: f64,
    },
}

impl Problem {
    /// Dimension of the search space.
    pub fn dim(&self) -> usize {
        match *self {
            Problem::Rosenbrock { dim, .. } | Problem::Artificial { dim, .. } => dim,
            Problem::Sat { .. } | Problem::Ising { .. } => 4,
            Problem::Alignment { .. } | Problem::Eigenratio { .. } => 2,
        }
    }

    fn to_json(&self) -> Value {
        match self {
            Problem::Rosenbrock { dim, beta, noise } => {
                let mut m = json!({ "dim": dim, "beta": beta });
                put_noise(&mut m, noise);
                m
            }
            Problem::Artificial { objective, dim, noise } => {
                let mut m = json!({ "objective": objective.as_str(), "dim": dim });
                put_noise(&mut m, noise);
                m
            }
            Problem::Sat { n, alpha, steps, success } => json!({
                "n": n, "alpha": alpha, "steps": steps,
                "success": match success { SuccessMode::AnyStep => "any-step", SuccessMode::FinalStep => "final-step" },
            }),
            Problem::Ising { n, beta_e, steps } => json!({ "n": n, "beta_e": beta_e, "steps": steps }),
            Problem::Alignment {
                hessian_eigs,
                kernel_eigs,
                theta0_deg,
                grid_step_deg,
            } => json!({
                "hessian_eigs": hessian_eigs, "kernel_eigs": kernel_eigs, "theta0_deg": theta0_deg,
                "grid_step_deg": grid_step_deg,
            }),
            Problem::Eigenratio {
                ratio,
                theta0_deg,
                lambda,
                w_init,
            } => json!({ "ratio": ratio, "theta0_deg": theta0_deg, "lambda": lambda, "w_init": w_init }),
        }
    }
}

fn put_noise(m: &mut Value, noise: &NoiseModel) {
    let obj = m.as_object_mut().expect("object");
    match *noise {
        NoiseModel::None => {
            obj.insert("noise".into(), "none".into());
        }
        NoiseModel::Bernoulli => {
            obj.insert("noise".into(), "bernoulli".into());
        }
        NoiseModel::AdditiveGaussian { sigma } => {
            obj.insert("noise".into(), "gaussian".into());
            obj.insert("sigma".into(), sigma.into());
        }
    }
}

/// A validated, fully defaulted experiment description.
#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentConfig {
    pub kind: ExperimentKind,
    pub problem: Problem,
    /// `None` for kinds without an optimizer choice.
    pub optimizer: Option<OptimizerSettings>,
    /// `None` for kinds that need no starting point.
    pub start: Option<Start>,
    pub seeds: Vec<u64>,
    /// Oracle calls per seed; Monte-Carlo draws per grid point for alignment.
    pub budget: u64,
    /// Tuning kinds only: sample counts at which held-out fitness is measured.
    pub checkpoints: Vec<u64>,
    pub output: PathBuf,
}

impl ExperimentConfig {
    pub fn with_budget(mut self, budget: u64) -> Result<Self> {
        self.budget = budget;
        if self.kind.is_tuning() {
            self.checkpoints.retain(|&c| c < budget);
            self.checkpoints.push(budget);
        }
        self.validate()?;
        Ok(self)
    }

    pub fn with_seeds(mut self, seeds: Vec<u64>) -> Result<Self> {
        self.seeds = seeds;
        self.validate()?;
        Ok(self)
    }

    pub fn with_output(mut self, output: impl Into<PathBuf>) -> Self {
        self.output = output.into();
        self
    }

    /// Cross-field checks shared by the parser and the override setters.
    pub fn validate(&self) -> Result<()> {
        let mut issues = Vec::new();
        if self.budget == 0 {
            issues.push("budget: budget must be ≥ 1".to_string());
        }
        if self.seeds.is_empty() {
            issues.push("seeds: need at least one seed".to_string());
        }
        let mut sorted = self.seeds.clone();
        sorted.sort_unstable();
        sorted.dedup();
        if sorted.len() != self.seeds.len() {
            issues.push("seeds: seeds must be distinct".to_string());
        }
        if let Some(opt) = &self.optimizer {
            if let Err(e) = opt.validate() {
                issues.push(format!("optimizer: {e}"));
            }
        }
        if let Some(start) = &self.start {
            if start.dim() != self.problem.dim() {
                issues.push(format!(
                    "start: expected {} coordinates, got {}",
                    self.problem.dim(),
                    start.dim()
                ));
            }
        }
        if self.kind.is_tuning() {
            let ok = self.checkpoints.windows(2).all(|w| w[0] < w[1])
                && self.checkpoints.last().is_some_and(|&c| c <= self.budget);
            if !ok {
                issues.push("checkpoints: must be strictly increasing and ≤ budget".to_string());
            }
        }
        if issues.is_empty() {
            Ok(())
        } else {
            Err(Error::Config { issues })
        }
    }

    /// The resolved config as JSON. Parsing it back yields an equal config.
    pub fn to_json(&self) -> Value {
        let mut m = Map::new();
        m.insert("kind".into(), self.kind.as_str().into());
        if let Some(opt) = &self.optimizer {
            m.insert("algorithm".into(), opt.kind().as_str().into());
            m.insert("optimizer".into(), opt.to_json());
        }
        m.insert("problem".into(), self.problem.to_json());
        if let Some(start) = &self.start {
            m.insert("start".into(), start.to_json());
        }
        m.insert("seeds".into(), json!(self.seeds));
        m.insert("budget".into(), json!(self.budget));
        if self.kind.is_tuning() {
            m.insert("checkpoints".into(), json!(self.checkpoints));
        }
        m.insert("output".into(), self.output.display().to_string().into());
        Value::Object(m)
    }
}
