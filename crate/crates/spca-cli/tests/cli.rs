use std::path::Path;
use std::process::Command;

use spca_cli::config::{GeneratorSpec, ScenarioSource, SolverSettings, Targets};
use spca_cli::report::read_trace;
use spca_cli::{compare, run, Algorithm, RunConfig, ScenarioDoc, Units};

fn config(algorithm: Algorithm, gen: GeneratorSpec, seeds: Vec<u64>) -> RunConfig {
    RunConfig {
        schema_version: 1,
        algorithm: Some(algorithm),
        scenario: ScenarioSource::Generator(gen),
        seeds,
        solver: SolverSettings::default(),
        units: Units::Nats,
        timing: false,
        base_dir: Default::default(),
    }
}

fn small() -> GeneratorSpec {
    GeneratorSpec { links: 3, tx_antennas: 3, rx_antennas: 2, ..Default::default() }
}

fn read(p: &Path) -> Vec<u8> {
    std::fs::read(p).unwrap()
}

#[test]
fn repeated_runs_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config(Algorithm::See, small(), vec![1, 2, 3]);
    run(&cfg, &dir.path().join("x")).unwrap();
    run(&cfg, &dir.path().join("y")).unwrap();
    for name in ["trace_see_seed1.csv", "trace_see_seed2.csv", "trace_see_seed3.csv", "summary.json"] {
        assert_eq!(read(&dir.path().join("x").join(name)), read(&dir.path().join("y").join(name)), "{name}");
    }
}

#[test]
fn trace_rows_parse_and_match_summary() {
    let dir = tempfile::tempdir().unwrap();
    let (summary, _) = run(&config(Algorithm::Gee, small(), vec![5]), dir.path()).unwrap();
    let rows = read_trace(&dir.path().join("trace_gee_seed5.csv")).unwrap();
    let s = &summary.seeds[0];
    assert_eq!(rows.len(), s.iterations.unwrap() + 1);
    assert_eq!(rows.last().unwrap().objective, s.objective.unwrap());
    assert!(rows.iter().all(|r| r.ms == 0.0));
    assert_eq!(summary.aggregate.completed, 1);
}

#[test]
fn bits_are_nats_over_ln2() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = config(Algorithm::Gee, small(), vec![0]);
    let (nats, _) = run(&cfg, &dir.path().join("n")).unwrap();
    cfg.units = Units::Bits;
    let (bits, _) = run(&cfg, &dir.path().join("b")).unwrap();
    assert_eq!(bits.seeds[0].objective.unwrap(), nats.seeds[0].objective.unwrap() / std::f64::consts::LN_2);
}

#[test]
fn single_link_matches_power_sweep() {
    // one link: GEE is max over total power of the waterfilling rate over the consumed power
    let gen = GeneratorSpec { links: 1, tx_antennas: 2, rx_antennas: 2, ..Default::default() };
    let cfg = config(Algorithm::Gee, gen.clone(), vec![7]);
    let dir = tempfile::tempdir().unwrap();
    let (summary, _) = run(&cfg, dir.path()).unwrap();
    let sc = cfg.scenario(Algorithm::Gee, 7).unwrap();
    let l = sc.link(0);
    let h = sc.channel(0, 0);
    let gains: Vec<f64> = nalgebra::linalg::SymmetricEigen::new(h.adjoint() * h).eigenvalues.iter().map(|&e| e / l.sigma2).collect();
    let rate = |p: f64| {
        let (mut lo, mut hi) = (0.0, p + gains.iter().map(|g| 1.0 / g).sum::<f64>());
        for _ in 0..100 {
            let mu = 0.5 * (lo + hi);
            if gains.iter().map(|g| (mu - 1.0 / g).max(0.0)).sum::<f64>() > p {
                hi = mu
            } else {
                lo = mu
            }
        }
        gains.iter().map(|g| (lo * g).max(1.0).ln()).sum::<f64>()
    };
    let n = 200_000;
    let best = (1..=n).map(|i| l.p_max * i as f64 / n as f64).map(|p| rate(p) / (l.p0 + l.rho * p)).fold(0.0, f64::max);
    let got = summary.seeds[0].objective.unwrap();
    assert!((got - best).abs() <= 1e-6 * best, "{got} vs {best}");
}

#[test]
fn self_comparison_has_zero_deltas() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config(Algorithm::Gee, small(), vec![0, 1]);
    let (cmp, _, _) = compare(&cfg, &cfg, dir.path()).unwrap();
    assert!(cmp.rows.iter().all(|r| r.delta == Some(0.0)));
    for f in ["comparison.json", "comparison.csv", "curves.csv", "a/summary.json", "b/trace_gee_seed1.csv"] {
        assert!(dir.path().join(f).exists(), "{f}");
    }
}

#[test]
fn gee_and_slbm_pair_up() {
    let dir = tempfile::tempdir().unwrap();
    let a = config(Algorithm::Gee, small(), vec![0, 1]);
    let b = config(Algorithm::Slbm, small(), vec![0, 1]);
    let (cmp, _, _) = compare(&a, &b, dir.path()).unwrap();
    assert_eq!(cmp.algorithm_b, "slbm");
    assert_eq!(cmp.rows.iter().map(|r| r.seed).collect::<Vec<_>>(), vec![0, 1]);
    assert!(cmp.rows.iter().all(|r| r.objective_a.is_some() && r.objective_b.is_some()));
}

#[test]
fn constrained_runs_keep_their_targets() {
    let dir = tempfile::tempdir().unwrap();
    let gen = GeneratorSpec { targets: Some(Targets::FractionOfUniformPower(0.9)), ..small() };
    let a = config(Algorithm::Gee, gen.clone(), vec![0, 1]);
    let b = config(Algorithm::GeeQos, gen, vec![0, 1]);
    let (cmp, _, qos) = compare(&a, &b, dir.path()).unwrap();
    assert!(qos.seeds.iter().all(|s| s.min_rate_slack.unwrap() >= -1e-9));
    // both are local methods, so the ordering of the final values is not guaranteed
    assert!(cmp.rows.iter().all(|r| r.relative_delta.unwrap().abs() < 0.5));
}

#[test]
fn seed_mismatch_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let a = config(Algorithm::Gee, small(), vec![0]);
    let b = config(Algorithm::Gee, small(), vec![1]);
    assert!(compare(&a, &b, dir.path()).is_err());
}

#[test]
fn infeasible_targets_fail_per_seed() {
    let dir = tempfile::tempdir().unwrap();
    let gen = GeneratorSpec { targets: Some(Targets::Uniform(1e3)), ..small() };
    let (summary, _) = run(&config(Algorithm::GeeQos, gen, vec![0, 1]), dir.path()).unwrap();
    assert_eq!(summary.aggregate.failed, 2);
    assert!(summary.seeds[0].error.as_deref().unwrap().contains("slacks"));
    assert!(dir.path().join("trace_gee-qos_seed1.csv").exists());
}

#[test]
fn scenario_file_is_used() {
    let dir = tempfile::tempdir().unwrap();
    let sc = spca::model::generate_scenario(&small().to_generator(Algorithm::Gee), 11).unwrap();
    std::fs::write(dir.path().join("sc.json"), serde_json::to_string(&ScenarioDoc::from_scenario(&sc)).unwrap()).unwrap();
    let text = r#"{"schema_version": 1, "algorithm": "gee", "scenario": {"file": "sc.json"}, "seeds": [11], "units": "nats"}"#;
    std::fs::write(dir.path().join("run.json"), text).unwrap();
    let cfg = RunConfig::load(&dir.path().join("run.json")).unwrap();
    let (from_file, _) = run(&cfg, &dir.path().join("f")).unwrap();
    let (generated, _) = run(&config(Algorithm::Gee, small(), vec![11]), &dir.path().join("g")).unwrap();
    let (a, b) = (from_file.seeds[0].objective.unwrap(), generated.seeds[0].objective.unwrap());
    assert!((a - b).abs() <= 1e-9 * a);
}

#[test]
fn binary_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.json");
    std::fs::write(&cfg, r#"{"schema_version": 1, "scenario": {"generator": {"links": 2, "tx_antennas": 2, "rx_antennas": 2}}, "seeds": [0]}"#).unwrap();
    let bin = env!("CARGO_BIN_EXE_spca");
    let ok = Command::new(bin)
        .args(["run", "--algorithm", "see", "--config"])
        .arg(&cfg)
        .args(["--seeds", "0,1", "--units", "nats", "--max-iters", "500", "--tol", "1e-5", "--out"])
        .arg(dir.path().join("o"))
        .output()
        .unwrap();
    assert!(ok.status.success(), "{}", String::from_utf8_lossy(&ok.stderr));
    assert!(dir.path().join("o/trace_see_seed1.csv").exists());
    let capped = Command::new(bin).args(["run", "--algorithm", "gee", "--config"]).arg(&cfg).args(["--max-iters", "1", "--out"]).arg(dir.path().join("p")).output().unwrap();
    assert_eq!(capped.status.code(), Some(1));
    let bad = Command::new(bin).args(["run", "--algorithm", "lta", "--config"]).arg(&cfg).args(["--out"]).arg(dir.path().join("q")).output().unwrap();
    assert_eq!(bad.status.code(), Some(2));
}
