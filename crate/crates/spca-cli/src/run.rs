//! Seeded runs and head-to-head comparisons.

use std::path::Path;
use std::time::Instant;

use rayon::prelude::*;
use spca::algorithms::{solve_gee, solve_gee_qos, solve_see, solve_see_qos, IterationRecord, Solution};
use spca::baselines::solve_slbm;
use spca::model::{Blocks, Scenario};

use crate::config::{Algorithm, RunConfig, SolverSettings, SCHEMA_VERSION};
use crate::error::{CliError, Result};
use crate::report::{self, Comparison, ComparisonRow, CurveRow, RunSummary, SeedSummary, TraceRow};

/// Runs `algorithm` from uniform full power, `Q_k = (P_k/M_k) I`.
pub fn solve(algorithm: Algorithm, sc: &Scenario<f64>, settings: &SolverSettings) -> spca::Result<Solution<f64>> {
    let q0 = Blocks::uniform_full_power(sc);
    let cfg = settings.solver();
    match algorithm {
        Algorithm::Gee => solve_gee(sc, &cfg, &q0),
        Algorithm::See => solve_see(sc, &cfg, &q0),
        Algorithm::GeeQos => solve_gee_qos(sc, &cfg, &q0),
        Algorithm::SeeQos => solve_see_qos(sc, &cfg, &q0),
        Algorithm::Slbm => solve_slbm(sc, &settings.slbm(), &q0),
    }
}

/// Outcome of one seed: the (possibly partial) trace and its summary row.
#[derive(Debug, Clone)]
pub struct SeedRun {
    pub summary: SeedSummary,
    pub trace: Vec<IterationRecord>,
}

pub fn run_seed(cfg: &RunConfig, algorithm: Algorithm, seed: u64) -> SeedRun {
    let start = Instant::now();
    let out = cfg.scenario(algorithm, seed).and_then(|sc| Ok(solve(algorithm, &sc, &cfg.solver)?));
    let wall_ms = if cfg.timing { start.elapsed().as_secs_f64() * 1e3 } else { 0.0 };
    let units = cfg.units;
    match out {
        Ok(sol) => {
            let objectives: Vec<f64> = sol.trace.iter().map(|r| r.objective).collect();
            let last = sol.trace.last();
            SeedRun {
                summary: SeedSummary {
                    seed,
                    completed: true,
                    objective: Some(units.from_nats(sol.objective)),
                    iterations: Some(sol.iterations()),
                    iterations_to_1pct: Some(report::iterations_to_within(&objectives, 0.01)),
                    residual: last.map(|r| r.residual),
                    min_rate_slack: last.map(|r| units.from_nats(r.min_rate_slack)),
                    wall_ms,
                    error: None,
                },
                trace: sol.trace,
            }
        }
        Err(e) => {
            let trace = match &e {
                CliError::Solver(s) => s.trace().map(<[_]>::to_vec).unwrap_or_default(),
                _ => Vec::new(),
            };
            SeedRun {
                summary: SeedSummary {
                    seed,
                    completed: false,
                    objective: None,
                    iterations: None,
                    iterations_to_1pct: None,
                    residual: None,
                    min_rate_slack: None,
                    wall_ms,
                    error: Some(e.to_string()),
                },
                trace,
            }
        }
    }
}

pub fn trace_file_name(algorithm: Algorithm, seed: u64) -> String {
    format!("trace_{}_seed{seed}.csv", algorithm.tag())
}

/// Solves every seed (in parallel), then writes one trace per seed and
/// `summary.json` to `out`. Seeds that fail are recorded, not fatal.
pub fn run(cfg: &RunConfig, out: &Path) -> Result<(RunSummary, Vec<SeedRun>)> {
    let algorithm = cfg.validate()?;
    std::fs::create_dir_all(out).map_err(|e| CliError::Io(out.to_path_buf(), e))?;
    let runs: Vec<SeedRun> = cfg.seeds.par_iter().map(|&seed| run_seed(cfg, algorithm, seed)).collect();
    for r in &runs {
        let rows: Vec<TraceRow> = r.trace.iter().map(|rec| TraceRow::new(rec, cfg.units, cfg.timing)).collect();
        report::write_trace(&out.join(trace_file_name(algorithm, r.summary.seed)), &rows)?;
    }
    let seeds: Vec<SeedSummary> = runs.iter().map(|r| r.summary.clone()).collect();
    let summary = RunSummary {
        schema_version: SCHEMA_VERSION,
        algorithm: algorithm.tag().into(),
        units: cfg.units,
        aggregate: report::Aggregate::of(&seeds),
        seeds,
    };
    report::write_json(&out.join("summary.json"), &summary)?;
    Ok((summary, runs))
}

/// Runs both configurations on their (identical) seed lists into `out/a` and
/// `out/b`, and writes `comparison.json`, `comparison.csv` and `curves.csv`.
pub fn compare(a: &RunConfig, b: &RunConfig, out: &Path) -> Result<(Comparison, RunSummary, RunSummary)> {
    if a.seeds != b.seeds {
        return Err(CliError::Config("compared configurations must use the same seeds".into()));
    }
    if a.units != b.units {
        return Err(CliError::Config("compared configurations must use the same units".into()));
    }
    let (sa, ra) = run(a, &out.join("a"))?;
    let (sb, rb) = run(b, &out.join("b"))?;
    let rows = sa.seeds.iter().zip(&sb.seeds).map(|(x, y)| ComparisonRow::pair(x, y)).collect::<Vec<_>>();
    let cmp = Comparison { schema_version: SCHEMA_VERSION, algorithm_a: sa.algorithm.clone(), algorithm_b: sb.algorithm.clone(), units: a.units, rows };
    report::write_json(&out.join("comparison.json"), &cmp)?;
    report::write_csv(&out.join("comparison.csv"), &cmp.rows)?;
    let mut curves = Vec::new();
    for (tag, summary, runs, cfg) in [("a", &sa, &ra, a), ("b", &sb, &rb, b)] {
        for r in runs {
            for rec in &r.trace {
                let row = TraceRow::new(rec, cfg.units, cfg.timing);
                curves.push(CurveRow { run: tag.into(), algorithm: summary.algorithm.clone(), seed: r.summary.seed, t: row.t, objective: row.objective, ms: row.ms });
            }
        }
    }
    report::write_csv(&out.join("curves.csv"), &curves)?;
    Ok((cmp, sa, sb))
}
