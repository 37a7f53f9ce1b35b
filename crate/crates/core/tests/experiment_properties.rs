use anisotune::experiment::{parse_config_value, run_experiment, AlgorithmKind, ExperimentKind};
use proptest::prelude::*;
use serde_json::{json, Value};

fn small_problem(kind: ExperimentKind) -> Value {
    match kind {
        ExperimentKind::TuneSat => json!({ "n": 10, "steps": 20 }),
        ExperimentKind::TuneIsing => json!({ "n": 6, "steps": 20 }),
        ExperimentKind::Rosenbrock => json!({ "dim": 2 }),
        ExperimentKind::Artificial | ExperimentKind::Convergence => json!({ "dim": 3 }),
        ExperimentKind::Alignment => json!({ "grid_step_deg": 30 }),
        ExperimentKind::Eigenratio => json!({}),
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn samples_never_exceed_budget(kind_ix in 0usize..7, alg_ix in 0usize..4, budget in 1u64..400, seed in 0u64..1000) {
        let kind = ExperimentKind::ALL[kind_ix];
        prop_assume!(kind != ExperimentKind::Convergence);
        let mut doc = json!({
            "kind": kind.as_str(),
            "problem": small_problem(kind),
            "budget": budget,
            "seeds": [seed, seed + 1],
        });
        if kind.takes_algorithm() {
            doc["algorithm"] = AlgorithmKind::ALL[alg_ix].as_str().into();
        }
        let cfg = parse_config_value(&doc).unwrap();
        let out = run_experiment(&cfg).unwrap();
        for s in &out.seeds {
            prop_assert!(s.samples <= budget, "{kind}: {} > {budget}", s.samples);
            if let Some(last) = s.trace.last() {
                prop_assert!(last.n_s <= budget);
            }
        }
        let sm = out.summary;
        prop_assert!(sm.worst <= sm.mean + 1e-12 && sm.mean <= sm.best + 1e-12);
    }

    #[test]
    fn resolved_config_is_a_fixed_point(
        kind_ix in 0usize..7,
        alg_ix in 0usize..4,
        budget in 1u64..1_000_000,
        seeds in prop::collection::btree_set(0u64..10_000, 1..6),
    ) {
        let kind = ExperimentKind::ALL[kind_ix];
        let mut doc = json!({
            "kind": kind.as_str(),
            "budget": budget,
            "seeds": seeds.into_iter().collect::<Vec<_>>(),
        });
        if kind.takes_algorithm() {
            doc["algorithm"] = AlgorithmKind::ALL[alg_ix].as_str().into();
        }
        let cfg = parse_config_value(&doc).unwrap();
        let again = parse_config_value(&cfg.to_json()).unwrap();
        prop_assert_eq!(&cfg, &again);
        prop_assert_eq!(cfg.to_json(), again.to_json());
    }
}

#[test]
fn default_das_batch_is_recorded() {
    for dim in [2u64, 3, 7] {
        let cfg = parse_config_value(&json!({ "kind": "artificial", "problem": { "dim": dim } })).unwrap();
        assert_eq!(cfg.to_json()["optimizer"]["b0"], json!(10 * dim));
    }
}

#[test]
fn seed_runs_do_not_depend_on_thread_count() {
    let cfg = parse_config_value(&json!({
        "kind": "artificial",
        "algorithm": "dis",
        "budget": 5000,
        "seeds": [1, 2, 3, 4],
    }))
    .unwrap();
    let run = |threads: usize| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| run_experiment(&cfg).unwrap())
    };
    assert_eq!(run(1), run(6));
}
