//! Trace files, run summaries and comparison reports.

use std::path::Path;

use serde::{Deserialize, Serialize};
use spca::algorithms::IterationRecord;

use crate::config::Units;
use crate::error::{CliError, Result};

/// Column order of every trace file.
pub const TRACE_COLUMNS: [&str; 8] = ["t", "objective", "gamma", "residual", "min_rate_slack", "dinkelbach_iters", "dual_iters", "ms"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub t: usize,
    pub objective: f64,
    pub gamma: f64,
    pub residual: f64,
    pub min_rate_slack: f64,
    pub dinkelbach_iters: usize,
    pub dual_iters: usize,
    pub ms: f64,
}

impl TraceRow {
    pub fn new(r: &IterationRecord, units: Units, timing: bool) -> Self {
        TraceRow {
            t: r.t,
            objective: units.from_nats(r.objective),
            gamma: r.gamma,
            residual: r.residual,
            min_rate_slack: units.from_nats(r.min_rate_slack),
            dinkelbach_iters: r.dinkelbach_iters,
            dual_iters: r.dual_iters,
            ms: if timing { r.ms } else { 0.0 },
        }
    }
}

pub fn write_trace(path: &Path, rows: &[TraceRow]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    if rows.is_empty() {
        w.write_record(TRACE_COLUMNS)?;
    }
    for r in rows {
        w.serialize(r)?;
    }
    w.flush().map_err(|e| CliError::Io(path.to_path_buf(), e))
}

pub fn read_trace(path: &Path) -> Result<Vec<TraceRow>> {
    let mut r = csv::Reader::from_path(path)?;
    let header: Vec<String> = r.headers()?.iter().map(String::from).collect();
    if header != TRACE_COLUMNS {
        return Err(CliError::Config(format!("{}: unexpected trace header {header:?}", path.display())));
    }
    Ok(r.deserialize().collect::<std::result::Result<_, _>>()?)
}

/// First iteration whose objective is within 1% of the final one.
pub fn iterations_to_within(rows: &[f64], fraction: f64) -> usize {
    let Some(&last) = rows.last() else { return 0 };
    rows.iter().position(|&v| v >= last - fraction * last.abs()).unwrap_or(rows.len() - 1)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeedSummary {
    pub seed: u64,
    pub completed: bool,
    pub objective: Option<f64>,
    /// Outer iterations until the stationarity test passed.
    pub iterations: Option<usize>,
    pub iterations_to_1pct: Option<usize>,
    pub residual: Option<f64>,
    pub min_rate_slack: Option<f64>,
    pub wall_ms: f64,
    pub error: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Stats {
    pub mean: f64,
    pub median: f64,
    pub min: f64,
    pub max: f64,
}

impl Stats {
    pub fn of(values: &[f64]) -> Option<Self> {
        if values.is_empty() {
            return None;
        }
        let mut v = values.to_vec();
        v.sort_by(f64::total_cmp);
        let n = v.len();
        let median = if n % 2 == 1 { v[n / 2] } else { 0.5 * (v[n / 2 - 1] + v[n / 2]) };
        Some(Stats { mean: v.iter().sum::<f64>() / n as f64, median, min: v[0], max: v[n - 1] })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    pub completed: usize,
    pub failed: usize,
    pub objective: Option<Stats>,
    pub iterations: Option<Stats>,
    pub wall_ms: Option<Stats>,
}

impl Aggregate {
    pub fn of(seeds: &[SeedSummary]) -> Self {
        let ok: Vec<&SeedSummary> = seeds.iter().filter(|s| s.completed).collect();
        Aggregate {
            completed: ok.len(),
            failed: seeds.len() - ok.len(),
            objective: Stats::of(&ok.iter().filter_map(|s| s.objective).collect::<Vec<_>>()),
            iterations: Stats::of(&ok.iter().filter_map(|s| s.iterations.map(|i| i as f64)).collect::<Vec<_>>()),
            wall_ms: Stats::of(&ok.iter().map(|s| s.wall_ms).collect::<Vec<_>>()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub schema_version: u32,
    pub algorithm: String,
    pub units: Units,
    pub seeds: Vec<SeedSummary>,
    pub aggregate: Aggregate,
}

impl RunSummary {
    pub fn all_completed(&self) -> bool {
        self.seeds.iter().all(|s| s.completed)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonRow {
    pub seed: u64,
    pub objective_a: Option<f64>,
    pub objective_b: Option<f64>,
    /// `objective_b − objective_a`.
    pub delta: Option<f64>,
    pub relative_delta: Option<f64>,
    pub iterations_a: Option<usize>,
    pub iterations_b: Option<usize>,
    pub iterations_to_1pct_a: Option<usize>,
    pub iterations_to_1pct_b: Option<usize>,
    pub wall_ms_a: f64,
    pub wall_ms_b: f64,
}

impl ComparisonRow {
    pub fn pair(a: &SeedSummary, b: &SeedSummary) -> Self {
        let delta = a.objective.zip(b.objective).map(|(x, y)| y - x);
        ComparisonRow {
            seed: a.seed,
            objective_a: a.objective,
            objective_b: b.objective,
            delta,
            relative_delta: delta.zip(a.objective).map(|(d, x)| if x == 0.0 { d } else { d / x.abs() }),
            iterations_a: a.iterations,
            iterations_b: b.iterations,
            iterations_to_1pct_a: a.iterations_to_1pct,
            iterations_to_1pct_b: b.iterations_to_1pct,
            wall_ms_a: a.wall_ms,
            wall_ms_b: b.wall_ms,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    pub schema_version: u32,
    pub algorithm_a: String,
    pub algorithm_b: String,
    pub units: Units,
    pub rows: Vec<ComparisonRow>,
}

/// Long-format objective curves for plotting.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurveRow {
    pub run: String,
    pub algorithm: String,
    pub seed: u64,
    pub t: usize,
    pub objective: f64,
    pub ms: f64,
}

pub fn write_json<S: Serialize>(path: &Path, value: &S) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    std::fs::write(path, text).map_err(|e| CliError::Io(path.to_path_buf(), e))
}

pub fn write_csv<S: Serialize>(path: &Path, rows: &[S]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush().map_err(|e| CliError::Io(path.to_path_buf(), e))
}
