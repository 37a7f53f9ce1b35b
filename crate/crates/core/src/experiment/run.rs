use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde_json::{json, Map, Value};

use super::format::render_csv;
use super::{ExperimentConfig, ExperimentKind, Problem, VERSION};
use crate::analysis::{alignment_scan, eigenratio_trace, fit_convergence, AlignmentSetup, EigenratioSetup};
use crate::cosolvers::{HeldOutProtocol, ProblemGenerator, TuningOracle};
use crate::error::{Error, Result};
use crate::numeric::RngStream;
use crate::objectives::{NoisyObjective, ObjectiveKind, Oracle};
use crate::optimizers::BenchmarkTrace;

/// Extra per-seed CSV output.
#[derive(Clone, Debug, PartialEq)]
pub struct Table {
    pub name: &'static str,
    pub header: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SeedResult {
    pub seed: u64,
    /// Headline number for the kind: true fitness at the final point for the
    /// optimizer kinds, held-out success for tuning, the largest relative
    /// empirical gap for alignment, the final curvature ratio for eigenratio.
    pub value: f64,
    pub samples: u64,
    pub initial: Vec<f64>,
    pub x_final: Vec<f64>,
    pub metrics: Vec<(&'static str, f64)>,
    pub trace: BenchmarkTrace,
    pub tables: Vec<Table>,
}

impl SeedResult {
    pub fn metric(&self, name: &str) -> Option<f64> {
        self.metrics.iter().find(|(k, _)| *k == name).map(|&(_, v)| v)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
/// Aggregate of the per-seed values; `worst` is the smallest, `best` the largest.
pub struct RunSummary {
    pub mean: f64,
    pub worst: f64,
    pub best: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentOutput {
    pub config: ExperimentConfig,
    pub seeds: Vec<SeedResult>,
    pub summary: RunSummary,
    /// Kind-specific aggregates merged into the summary JSON.
    pub extra: Map<String, Value>,
}

/// Run every seed of `cfg` in parallel. Results depend only on the config,
/// not on the thread count.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentOutput> {
    cfg.validate()?;
    let seeds: Vec<SeedResult> = cfg
        .seeds
        .par_iter()
        .map(|&seed| {
            run_seed(cfg, seed).map_err(|e| Error::Seed {
                seed,
                source: Box::new(e),
            })
        })
        .collect::<Result<_>>()?;
    let values: Vec<f64> = seeds.iter().map(|s| s.value).collect();
    let summary = RunSummary {
        mean: values.iter().sum::<f64>() / values.len() as f64,
        worst: values.iter().copied().fold(f64::INFINITY, f64::min),
        best: values.iter().copied().fold(f64::NEG_INFINITY, f64::max),
    };
    let extra = aggregate(cfg, &seeds)?;
    Ok(ExperimentOutput {
        config: cfg.clone(),
        seeds,
        summary,
        extra,
    })
}

fn run_seed(cfg: &ExperimentConfig, seed: u64) -> Result<SeedResult> {
    let root = RngStream::new(seed);
    let initial = cfg.start.as_ref().map(|s| s.draw(seed)).unwrap_or_default();
    match &cfg.problem {
        Problem::Rosenbrock { dim, beta, noise } => {
            let obj = NoisyObjective::modified_rosenbrock(*dim, *beta, *noise);
            optimize(cfg, seed, &obj, initial, &root, 1.0)
        }
        Problem::Artificial { objective, dim, noise } => {
            let obj = match objective {
                ObjectiveKind::AnisoGauss => NoisyObjective::anisotropic_gaussian(*noise),
                ObjectiveKind::SymQuad => NoisyObjective::symmetric_quadratic(*dim, *noise),
                _ => NoisyObjective::asymmetric_quadratic(*dim, *noise),
            };
            optimize(cfg, seed, &obj, initial, &root, objective.optimum(*dim))
        }
        Problem::Sat { n, alpha, steps, success } => {
            let gen = ProblemGenerator::Sat {
                n: *n,
                alpha: *alpha,
                success: *success,
            };
            tune(cfg, seed, &TuningOracle::new(gen, *steps)?, initial, &root)
        }
        Problem::Ising { n, beta_e, steps } => {
            let gen = ProblemGenerator::Ising { n: *n, beta_e: *beta_e };
            tune(cfg, seed, &TuningOracle::new(gen, *steps)?, initial, &root)
        }
        Problem::Alignment {
            hessian_eigs,
            kernel_eigs,
            theta0_deg,
            grid_step_deg,
        } => {
            let setup = AlignmentSetup {
                hessian_eigs: (hessian_eigs[0], hessian_eigs[1]),
                kernel_eigs: (kernel_eigs[0], kernel_eigs[1]),
                theta0: theta0_deg.to_radians(),
                empirical_draws: cfg.budget,
            };
            let count = (180.0 / grid_step_deg - 1e-9).floor() as usize + 1;
            let degrees: Vec<f64> = (0..count).map(|i| i as f64 * grid_step_deg).collect();
            let grid: Vec<f64> = degrees.iter().map(|d| d.to_radians()).collect();
            let points = alignment_scan(&grid, &setup, &root.child(1))?;
            let argmin = |key: fn(&crate::analysis::AlignmentPoint) -> f64| {
                (0..points.len())
                    .min_by(|&a, &b| key(&points[a]).total_cmp(&key(&points[b])))
                    .map_or(f64::NAN, |i| degrees[i])
            };
            let gap = points
                .iter()
                .map(|p| ((p.empirical - p.exact) / p.exact).abs())
                .fold(0.0, f64::max);
            Ok(SeedResult {
                seed,
                value: gap,
                samples: drawn_per_point(cfg.budget),
                initial,
                x_final: Vec::new(),
                metrics: vec![
                    ("argmin_exact_deg", argmin(|p| p.exact)),
                    ("argmin_approx_deg", argmin(|p| p.approx)),
                    ("argmin_empirical_deg", argmin(|p| p.empirical)),
                    ("max_relative_gap", gap),
                ],
                trace: BenchmarkTrace::default(),
                tables: vec![Table {
                    name: "alignment",
                    header: ["theta_deg", "E_exact", "E_approx", "E_empirical"].map(String::from).to_vec(),
                    rows: points
                        .iter()
                        .zip(&degrees)
                        .map(|(p, &deg)| vec![deg, p.exact, p.approx, p.empirical])
                        .collect(),
                }],
            })
        }
        Problem::Eigenratio {
            ratio,
            theta0_deg,
            lambda,
            w_init,
        } => {
            let setup = EigenratioSetup {
                ratio: *ratio,
                theta0: theta0_deg.to_radians(),
                lambda: *lambda,
                budget: cfg.budget,
                x0: initial.clone(),
                w_init: *w_init,
            };
            let (points, trace) = eigenratio_trace(&setup, &root.child(1))?;
            let last = points.last().ok_or(Error::InsufficientData { needed: 1, have: 0 })?;
            let angle_deg = last.angle.to_degrees().rem_euclid(180.0);
            let misalign = {
                let d = (angle_deg - theta0_deg.rem_euclid(180.0)).rem_euclid(180.0);
                d.min(180.0 - d)
            };
            Ok(SeedResult {
                seed,
                value: last.ratio,
                samples: trace.samples_used(),
                initial,
                x_final: trace.last().map(|r| r.x.clone()).unwrap_or_default(),
                metrics: vec![
                    ("final_ratio", last.ratio),
                    ("final_angle_deg", angle_deg),
                    ("axis_misalignment_deg", misalign),
                ],
                tables: vec![Table {
                    name: "ratio",
                    header: ["n_s", "ratio", "window_norm", "angle_deg"].map(String::from).to_vec(),
                    rows: points
                        .iter()
                        .map(|p| vec![p.n_s as f64, p.ratio, p.window_norm, p.angle.to_degrees().rem_euclid(180.0)])
                        .collect(),
                }],
                trace,
            })
        }
    }
}

/// Draws the empirical curve actually spends per grid point.
fn drawn_per_point(budget: u64) -> u64 {
    if budget < 2 {
        return 0;
    }
    let reps = budget.min(10_000);
    reps * (budget / reps).max(1)
}

fn optimize(
    cfg: &ExperimentConfig,
    seed: u64,
    obj: &dyn Oracle,
    initial: Vec<f64>,
    root: &RngStream,
    optimum: f64,
) -> Result<SeedResult> {
    let opt = cfg.optimizer.as_ref().expect("optimizer kinds carry settings");
    let out = opt.run(initial.clone(), cfg.budget, obj, &root.child(1))?;
    let value = obj.true_value(&out.x_final).unwrap_or(f64::NAN);
    Ok(SeedResult {
        seed,
        value,
        samples: obj.calls(),
        initial,
        x_final: out.x_final,
        metrics: vec![("error", optimum - value)],
        trace: out.trace,
        tables: Vec::new(),
    })
}

fn tune(
    cfg: &ExperimentConfig,
    seed: u64,
    oracle: &TuningOracle,
    initial: Vec<f64>,
    root: &RngStream,
) -> Result<SeedResult> {
    let opt = cfg.optimizer.as_ref().expect("tuning kinds carry settings");
    let out = opt.run(initial.clone(), cfg.budget, oracle, &root.child(1))?;
    let protocol = HeldOutProtocol::default();
    let mut rows = Vec::with_capacity(cfg.checkpoints.len());
    for &c in &cfg.checkpoints {
        let theta = out.trace.at(c).map_or(initial.as_slice(), |r| r.x.as_slice());
        let score = oracle.held_out(theta, &protocol)?;
        let mut row = vec![c as f64, score];
        row.extend_from_slice(theta);
        rows.push(row);
    }
    let value = oracle.held_out(&out.x_final, &protocol)?;
    let initial_value = oracle.held_out(&initial, &protocol)?;
    Ok(SeedResult {
        seed,
        value,
        samples: oracle.calls(),
        initial,
        x_final: out.x_final,
        metrics: vec![("initial_held_out", initial_value)],
        trace: out.trace,
        tables: vec![Table {
            name: "held_out",
            header: ["n_s", "held_out", "dt", "p_init", "p_end", "beta"].map(String::from).to_vec(),
            rows,
        }],
    })
}

fn aggregate(cfg: &ExperimentConfig, seeds: &[SeedResult]) -> Result<Map<String, Value>> {
    let mut extra = Map::new();
    let mean_metric = |name: &str| {
        let v: Vec<f64> = seeds.iter().filter_map(|s| s.metric(name)).collect();
        v.iter().sum::<f64>() / v.len() as f64
    };
    match cfg.kind {
        ExperimentKind::Convergence => {
            let Problem::Artificial { objective, dim, .. } = &cfg.problem else {
                unreachable!("convergence runs artificial objectives")
            };
            let optimum = objective.optimum(*dim);
            let lo = (cfg.budget as f64 / 1000.0).max(1.0).ln();
            let hi = (cfg.budget as f64).ln();
            let mut points = Vec::new();
            for i in 0..61 {
                let n = (lo + (hi - lo) * i as f64 / 60.0).exp().round() as u64;
                let errs: Option<Vec<f64>> = seeds.iter().map(|s| s.trace.at(n).map(|r| optimum - r.fitness)).collect();
                if let Some(errs) = errs {
                    points.push((n as f64, errs.iter().sum::<f64>() / errs.len() as f64));
                }
            }
            let (c, slope) = fit_convergence(&points, *dim)?;
            extra.insert("fit".into(), json!({ "c": c, "slope": slope }));
            extra.insert("mean_error_curve".into(), json!(points));
        }
        ExperimentKind::TuneSat | ExperimentKind::TuneIsing => {
            extra.insert("mean_initial_held_out".into(), json!(mean_metric("initial_held_out")));
        }
        ExperimentKind::Rosenbrock | ExperimentKind::Artificial => {
            extra.insert("mean_error".into(), json!(mean_metric("error")));
        }
        ExperimentKind::Alignment => {
            extra.insert("argmin_exact_deg".into(), json!(mean_metric("argmin_exact_deg")));
            extra.insert("argmin_empirical_deg".into(), json!(mean_metric("argmin_empirical_deg")));
        }
        ExperimentKind::Eigenratio => {
            extra.insert("mean_axis_misalignment_deg".into(), json!(mean_metric("axis_misalignment_deg")));
        }
    }
    Ok(extra)
}

/// The `summary.json` document.
pub fn summary_json(out: &ExperimentOutput) -> Value {
    let per_seed: Vec<Value> = out
        .seeds
        .iter()
        .map(|s| {
            let mut m = Map::new();
            m.insert("seed".into(), json!(s.seed));
            m.insert("value".into(), json!(s.value));
            m.insert("samples".into(), json!(s.samples));
            m.insert("initial".into(), json!(s.initial));
            m.insert("x_final".into(), json!(s.x_final));
            for (k, v) in &s.metrics {
                m.insert((*k).into(), json!(v));
            }
            Value::Object(m)
        })
        .collect();
    let mut doc = Map::new();
    doc.insert("version".into(), VERSION.into());
    doc.insert("config".into(), out.config.to_json());
    doc.insert("per_seed".into(), per_seed.into());
    doc.insert("mean".into(), json!(out.summary.mean));
    doc.insert("worst".into(), json!(out.summary.worst));
    doc.insert("best".into(), json!(out.summary.best));
    for (k, v) in &out.extra {
        doc.insert(k.clone(), v.clone());
    }
    Value::Object(doc)
}

/// Write `seed_<s>.csv` traces, `<table>_seed_<s>.csv` extras and
/// `summary.json` into `dir`. Returns the paths written.
pub fn write_outputs(out: &ExperimentOutput, dir: &Path) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let config = out.config.to_json().to_string();
    let mut written = Vec::new();
    let mut put = |name: String, body: String| -> Result<()> {
        let path = dir.join(name);
        fs::write(&path, body).map_err(|e| Error::io(&path, e))?;
        written.push(path);
        Ok(())
    };
    for s in &out.seeds {
        if !s.trace.is_empty() {
            let dim = s.trace.records[0].x.len();
            let mut header: Vec<String> = ["step", "n_s", "window_norm", "fitness"].map(String::from).to_vec();
            header.extend((0..dim).map(|i| format!("x{i}")));
            let rows: Vec<Vec<f64>> = s
                .trace
                .records
                .iter()
                .map(|r| {
                    let mut row = vec![r.step as f64, r.n_s as f64, r.window_norm, r.fitness];
                    row.extend_from_slice(&r.x);
                    row
                })
                .collect();
            let header: Vec<&str> = header.iter().map(String::as_str).collect();
            put(format!("seed_{}.csv", s.seed), render_csv(&config, &header, &rows))?;
        }
        for t in &s.tables {
            let header: Vec<&str> = t.header.iter().map(String::as_str).collect();
            put(format!("{}_seed_{}.csv", t.name, s.seed), render_csv(&config, &header, &t.rows))?;
        }
    }
    let mut summary = serde_json::to_string_pretty(&summary_json(out)).expect("json values serialize");
    summary.push('\n');
    put("summary.json".into(), summary)?;
    Ok(written)
}
