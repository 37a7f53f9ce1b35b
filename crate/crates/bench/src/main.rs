use std::path::PathBuf;
use std::process::ExitCode;

use anisotune::experiment::{parse_config_value, run_experiment, write_outputs, AlgorithmKind, ExperimentKind};
use anyhow::{bail, Context};
use clap::{CommandFactory, Parser};
use serde_json::Value;

const JOBS_ENV: &str = "ANISO_TUNE_JOBS";

/// Run a seeded experiment suite and write per-seed CSV traces plus summary.json.
#[derive(Parser, Debug)]
#[command(name = "bench", version)]
struct Cli {
    /// Experiment kind (see --list).
    #[arg(value_name = "KIND", value_parser = kind_parser(), required_unless_present = "list")]
    kind: Option<String>,

    /// JSON config; omitted fields take the kind's defaults.
    #[arg(long, value_name = "PATH")]
    config: Option<PathBuf>,

    /// Comma-separated seeds, replacing the config's list.
    #[arg(long, value_name = "A,B,C", value_delimiter = ',')]
    seeds: Option<Vec<u64>>,

    /// Oracle-call budget per seed.
    #[arg(long, value_name = "N")]
    budget: Option<u64>,

    /// Output directory.
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,

    /// Worker threads [env: ANISO_TUNE_JOBS; default: all cores].
    #[arg(long, value_name = "N")]
    jobs: Option<usize>,

    /// Print the available kinds and algorithms.
    #[arg(long)]
    list: bool,
}

fn kind_parser() -> clap::builder::PossibleValuesParser {
    clap::builder::PossibleValuesParser::new(ExperimentKind::ALL.map(|k| k.as_str()))
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = e.exit_code();
            let text = e.render().to_string();
            if code == 2 && !text.contains("Usage:") {
                eprintln!("{text}\n{}", Cli::command().render_usage());
            } else if code == 0 {
                print!("{text}");
            } else {
                eprint!("{text}");
            }
            return ExitCode::from(code as u8);
        }
    };
    if cli.list {
        println!("kinds:");
        for k in ExperimentKind::ALL {
            println!("  {k}");
        }
        println!("algorithms:");
        for a in AlgorithmKind::ALL {
            println!("  {a}");
        }
        return ExitCode::SUCCESS;
    }
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn run(cli: &Cli) -> anyhow::Result<()> {
    let kind: ExperimentKind = cli.kind.as_deref().expect("required by clap").parse()?;
    let jobs = match cli.jobs {
        Some(n) => Some(n),
        None => match std::env::var(JOBS_ENV) {
            Ok(v) => Some(v.trim().parse().with_context(|| format!("{JOBS_ENV}={v} is not a thread count"))?),
            Err(_) => None,
        },
    };
    if let Some(n) = jobs {
        if n == 0 {
            bail!("--jobs must be >= 1");
        }
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    }

    let mut doc = match &cli.config {
        Some(path) => {
            let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            serde_json::from_str::<Value>(&text).with_context(|| format!("{} is not valid JSON", path.display()))?
        }
        None => Value::Object(Default::default()),
    };
    let Some(top) = doc.as_object_mut() else {
        bail!("config must be a JSON object");
    };
    match top.get("kind").and_then(Value::as_str) {
        Some(k) if k != kind.as_str() => bail!("config is for `{k}`, not `{kind}`"),
        _ => {
            top.insert("kind".into(), kind.as_str().into());
        }
    }

    let mut cfg = parse_config_value(&doc)?;
    if let Some(b) = cli.budget {
        cfg = cfg.with_budget(b)?;
    }
    if let Some(s) = &cli.seeds {
        cfg = cfg.with_seeds(s.clone())?;
    }
    if let Some(dir) = &cli.out {
        cfg = cfg.with_output(dir);
    }

    let out = run_experiment(&cfg)?;
    let paths = write_outputs(&out, &cfg.output)?;
    for s in &out.seeds {
        println!("seed {:>6}  value {:.6}  n_s {}", s.seed, s.value, s.samples);
    }
    println!(
        "{kind}: mean {:.6}  worst {:.6}  best {:.6}",
        out.summary.mean, out.summary.worst, out.summary.best
    );
    for (k, v) in &out.extra {
        if !v.is_array() {
            println!("{k}: {v}");
        }
    }
    println!("wrote {} files to {}", paths.len(), cfg.output.display());
    Ok(())
}
