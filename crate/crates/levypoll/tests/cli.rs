use std::process::Command;

use levypoll::config::{to_json, Num};
use levypoll::{load, parse_config, CliError, ConfigError, Overrides};
use levypoll_core::mtjbp::rate_matrix;

const CONFIGS: &str = concat!(env!("CARGO_MANIFEST_DIR"), "/configs");

fn config(name: &str) -> String {
    std::fs::read_to_string(format!("{CONFIGS}/{name}.json")).unwrap()
}

fn small(name: &str) -> String {
    let mut doc = parse_config(&config(name)).unwrap();
    doc.simulation.warmup_cycles = 50;
    doc.simulation.measured_cycles = 400;
    doc.simulation.replications = 4;
    to_json(&doc)
}

#[test]
fn minimal_single_queue_config_is_valid() {
    let text = r#"{"version": 1, "model": {"input": {"components": [
        {"rate": 0.5, "jump": {"type": "exponential", "mean": 0.4}, "scale": [1]}]},
        "queues": [{"switch": {"duration": {"type": "deterministic", "value": 1}}}]}}"#;
    let doc = parse_config(text).unwrap();
    let r = doc.resolve().unwrap();
    assert_eq!(r.model.dim(), 1);
    assert_eq!(r.model.queues[0].discipline, levypoll_core::Discipline::Exhaustive);
    assert_eq!(r.points.len(), 3);
    assert_eq!(r.simulation, levypoll_core::SimConfig::default());
}

#[test]
fn two_queue_config_has_expected_rate_matrix() {
    let r = parse_config(&config("two_queue_exhaustive")).unwrap().resolve().unwrap();
    assert_eq!(rate_matrix(&r.model).rows(), vec![vec![-0.8, 0.3], vec![0.2, -0.7]]);
}

#[test]
fn gated_queue_with_brownian_noise_is_rejected() {
    let text = config("two_queue_gated").replacen("\"discipline\": \"gated\"", "\"brownian_sd\": 0.1, \"discipline\": \"gated\"", 1);
    let err = parse_config(&text).unwrap_err();
    assert!(err.to_string().contains("gated requires unit-rate drift service"), "{err}");
}

#[test]
fn schema_errors_name_the_offending_path() {
    let text = config("two_queue_gated").replacen("\"value\": 1.0", "\"value\": 1.0, \"colour\": 3", 1);
    match parse_config(&text) {
        Err(ConfigError::Schema { path, message }) => {
            assert!(path.starts_with("model.queues[0].switch"), "{path}");
            assert!(message.contains("colour"), "{message}");
        }
        other => panic!("expected schema error, got {other:?}"),
    }
    let text = config("n1_gated").replacen("\"version\": 1", "\"version\": 7", 1);
    assert!(matches!(parse_config(&text), Err(ConfigError::Version(7))));
    let text = config("n1_gated").replacen("\"rate\": 0.5", "\"rate\": \"half\"", 1);
    assert!(matches!(parse_config(&text), Err(ConfigError::Schema { .. })));
}

#[test]
fn decimal_strings_parse_like_numbers() {
    let a = parse_config(&config("n1_gated")).unwrap();
    let b = parse_config(&config("n1_gated").replacen("\"rate\": 0.5", "\"rate\": \"0.5\"", 1)).unwrap();
    assert_eq!(a, b);
    let doc = parse_config(&config("varying_input")).unwrap();
    let drift = &doc.model.input.drift;
    assert_eq!(drift[0], Num(0.02));
}

#[test]
fn tensor_grid_expands_in_row_major_order() {
    let r = parse_config(&config("varying_input")).unwrap().resolve().unwrap();
    assert_eq!(
        r.points,
        vec![vec![0.0, 0.5, 0.0], vec![0.0, 0.5, 1.2], vec![0.8, 0.5, 0.0], vec![0.8, 0.5, 1.2]]
    );
    let mut doc = parse_config(&config("n1_gated")).unwrap();
    doc.evaluation.points[1][0] = Num(-0.25);
    assert!(matches!(parse_config(&to_json(&doc)), Err(ConfigError::Other(_))));
}

#[test]
fn every_reference_config_round_trips() {
    for entry in std::fs::read_dir(CONFIGS).unwrap() {
        let text = std::fs::read_to_string(entry.unwrap().path()).unwrap();
        let doc = parse_config(&text).unwrap();
        let again = parse_config(&to_json(&doc)).unwrap();
        assert_eq!(doc, again);
        assert_eq!(to_json(&doc), to_json(&again));
    }
}

#[test]
fn overrides_replace_seed_and_replications() {
    let (doc, r) = load(&config("n1_gated"), Overrides { seed: Some(42), replications: Some(3) }).unwrap();
    assert_eq!((doc.simulation.seed, r.simulation.seed, r.simulation.replications), (42, 42, 3));
}

#[test]
fn unstable_models_are_refused() {
    let (doc, r) = load(&config("supercritical"), Overrides::default()).unwrap();
    assert!(matches!(levypoll::transform(&r), Err(CliError::Refused { verdict: "unstable", .. })));
    assert!(matches!(levypoll::validate(&r), Err(CliError::Refused { .. })));
    let report: serde_json::Value = serde_json::from_str(&levypoll::analyze(&doc, &r).unwrap()).unwrap();
    assert_eq!(report["stability"]["verdict"], "unstable");
    assert!(report["moments"].is_null());
    assert!((report["stability"]["rho_a"].as_f64().unwrap() - 0.5).abs() < 1e-10);
}

#[test]
fn transform_rows_at_zero_are_one() {
    let (_, r) = load(&config("two_queue_mixed"), Overrides::default()).unwrap();
    let csv = levypoll::transform(&r).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next().unwrap(), "point,u1,u2,quantity,queue,value,terms_used");
    for line in csv.lines().filter(|l| l.starts_with("0,")) {
        assert_eq!(line.split(',').nth(5).unwrap(), "1.00000000000e0", "{line}");
    }
}

#[test]
fn validate_passes_on_reference_model() {
    let (_, r) = load(&small("two_queue_mixed"), Overrides::default()).unwrap();
    let outcome = levypoll::validate(&r).unwrap();
    assert!(outcome.passed, "{:?}", outcome.failures);
    assert!(outcome.csv.lines().skip(1).all(|l| l.ends_with(",true")));
}

#[test]
fn outputs_are_byte_identical_across_runs() {
    let (_, r) = load(&small("varying_input"), Overrides::default()).unwrap();
    assert_eq!(levypoll::simulate(&r).unwrap(), levypoll::simulate(&r).unwrap());
    assert_eq!(levypoll::transform(&r).unwrap(), levypoll::transform(&r).unwrap());
    assert_eq!(levypoll::trace(&r, 5).unwrap(), levypoll::trace(&r, 5).unwrap());
    let (_, other) = load(&small("varying_input"), Overrides { seed: Some(2), replications: None }).unwrap();
    assert_ne!(levypoll::simulate(&r).unwrap(), levypoll::simulate(&other).unwrap());
}

#[test]
fn trace_rows_tile_time() {
    let (_, r) = load(&small("two_queue_mixed"), Overrides::default()).unwrap();
    let csv = levypoll::trace(&r, 20).unwrap();
    let mut last_end = 0.0;
    for line in csv.lines().skip(1) {
        let cells: Vec<&str> = line.split(',').collect();
        let (start, end): (f64, f64) = (cells[3].parse().unwrap(), cells[4].parse().unwrap());
        assert!((start - last_end).abs() <= 1e-9 * end.max(1.0), "{line}");
        assert!(end >= start);
        last_end = end;
    }
}

#[test]
fn binary_honours_environment_and_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.json");
    std::fs::write(&cfg, small("n1_exhaustive")).unwrap();
    let bin = env!("CARGO_BIN_EXE_levypoll");
    let run = |args: &[&str], seed: &str| {
        Command::new(bin).args(args).env("LEVYPOLL_SEED", seed).env("LEVYPOLL_REPLICATIONS", "3").output().unwrap()
    };
    let cfg_s = cfg.to_str().unwrap();
    let a = run(&["simulate", "--config", cfg_s], "5");
    let b = run(&["simulate", "--config", cfg_s], "5");
    let c = run(&["simulate", "--config", cfg_s, "--seed", "6"], "5");
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
    assert_ne!(a.stdout, c.stdout);
    assert!(String::from_utf8_lossy(&a.stdout).lines().nth(1).unwrap().ends_with(",3"));

    let out = dir.path().join("v.csv");
    let v = run(&["validate", "--config", cfg_s, "--out", out.to_str().unwrap()], "1");
    assert_eq!(v.status.code(), Some(0), "{}", String::from_utf8_lossy(&v.stderr));
    assert!(std::fs::read_to_string(&out).unwrap().starts_with("kind,quantity"));

    std::fs::write(&cfg, config("supercritical")).unwrap();
    let v = run(&["validate", "--config", cfg_s], "1");
    assert_eq!(v.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&v.stderr).contains("unstable"));
}

#[test]
fn validate_fails_when_the_model_is_misstated() {
    // Simulate one model but compare against the analysis of another.
    let (_, truth) = load(&small("two_queue_gated"), Overrides::default()).unwrap();
    let mut doc = parse_config(&small("two_queue_gated")).unwrap();
    doc.model.input.components[0].rate = Num(0.8);
    let wrong = doc.resolve().unwrap();
    let est = levypoll::commands::run_simulation(&truth.model, &truth.simulation, &Default::default()).unwrap();
    let analysis = levypoll_core::Analysis::new(&wrong.model).unwrap();
    let z = est.cycle_length.z_score(analysis.means().mean_cycle);
    assert!(z.abs() > levypoll::commands::Z_LIMIT, "{z}");
}

mod props {
    use super::*;
    use levypoll::config::{DisciplineBlock, SimulationBlock};
    use proptest::prelude::*;

    fn discipline() -> impl Strategy<Value = DisciplineBlock> {
        let leaf = prop_oneof![
            Just(DisciplineBlock::Exhaustive),
            (0.0..0.9f64).prop_map(|p| DisciplineBlock::PExhaustive { p: Num(p) }),
        ];
        leaf.prop_recursive(2, 4, 2, |inner| {
            prop_oneof![
                (0.0..=1.0f64, inner.clone(), inner.clone()).prop_map(|(p, l, r)| DisciplineBlock::Mixture {
                    p: Num(p),
                    left: Box::new(l),
                    right: Box::new(r)
                }),
                (inner.clone(), inner).prop_map(|(f, s)| DisciplineBlock::Composition {
                    first: Box::new(f),
                    second: Box::new(s)
                }),
            ]
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]
        #[test]
        fn parse_serialize_parse_is_identity(
            d in discipline(),
            rate in 0.01..0.6f64,
            mean in 0.01..1.0f64,
            seed in any::<u64>(),
            reps in 1usize..64,
            step in 1e-5..1e-2f64,
        ) {
            let mut doc = parse_config(&config("two_queue_mixed")).unwrap();
            doc.model.queues[0].discipline = d;
            doc.model.input.components[0].rate = Num(rate);
            doc.model.input.components[1].jump = levypoll::config::JumpBlock::Exponential { mean: Num(mean) };
            doc.simulation = SimulationBlock { seed, replications: reps, brownian_step: Num(step), ..SimulationBlock::default() };
            if doc.resolve().is_err() {
                return Ok(());
            }
            let text = to_json(&doc);
            let back = parse_config(&text).unwrap();
            prop_assert_eq!(&back, &doc);
            prop_assert_eq!(to_json(&back), text);
        }
    }
}

#[test]
fn zero_input_model_is_stable_and_simulates_as_pure_switching() {
    let text = r#"{"version": 1, "model": {"input": {"components": []},
        "queues": [{"service_rate": 2, "switch": {"duration": {"type": "deterministic", "value": 1}}},
                   {"switch": {"duration": {"type": "deterministic", "value": 0.5}}}]},
        "simulation": {"warmup_cycles": 5, "measured_cycles": 20, "replications": 2}}"#;
    let (doc, r) = load(text, Overrides::default()).unwrap();
    let report: serde_json::Value = serde_json::from_str(&levypoll::analyze(&doc, &r).unwrap()).unwrap();
    assert_eq!(report["stability"]["verdict"], "stable");
    assert!((report["stability"]["rho_a"].as_f64().unwrap() + 1.0).abs() < 1e-10);
    assert!(report["moments"].is_null());
    let csv = levypoll::simulate(&r).unwrap();
    // Columns: quantity,queue,component,point,u1,u2,mean,stderr,n
    let rows: Vec<Vec<&str>> = csv.lines().skip(1).map(|l| l.split(',').collect()).collect();
    let mean = |row: &Vec<&str>| row[6].parse::<f64>().unwrap();
    let cycle = rows.iter().find(|row| row[0] == "cycle_length").unwrap();
    assert!((mean(cycle) - 1.5).abs() < 1e-12);
    let levels: Vec<_> = rows.iter().filter(|row| row[0] == "polling_level").collect();
    assert_eq!(levels.len(), 4);
    assert!(levels.iter().all(|row| mean(row) == 0.0));
}
