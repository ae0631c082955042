//! Acceptance report: one PASS/FAIL line per criterion.
//!
//! Runs without the test harness so the lines always reach stdout. The process
//! exits nonzero only when an invariant breaks; criteria that are known to be
//! out of reach (wall-clock budgets on slow machines, distinct local optima
//! reached by different methods) are reported but do not fail the build.

mod common;

use std::time::Instant;

use common::*;
use rand::Rng;
use spca::algorithms::{
    gee_surrogate, kkt_residual, recover_duals, see_surrogate_k, solve_gee, solve_gee_qos, solve_see, solve_see_qos, Solution, SolverConfig,
};
use spca::baselines::{solve_slbm, SlbmConfig};
use spca::linalg::{self, cplx, herm, re_inner, CMat};
use spca::model::{generate_scenario, Blocks, Evaluation, GeneratorConfig, Objective, RatePowerModel, Scenario};
use spca::solvers::{dinkelbach, projected_gradient_concave, waterfill, y_gradient, y_objective, y_subproblem, BlockSet, PgOptions, WaterfillProblem};

struct Line {
    id: u32,
    pass: bool,
    /// Whether a failure breaks the build.
    hard: bool,
    detail: String,
}

fn line(id: u32, pass: bool, hard: bool, detail: String) -> Line {
    Line { id, pass, hard, detail }
}

fn monotone(sol: &Solution<f64>) -> bool {
    sol.trace.windows(2).all(|w| w[1].objective >= w[0].objective - 1e-10)
}

fn max_dinkelbach(sols: &[&Solution<f64>]) -> usize {
    sols.iter().flat_map(|s| s.trace.iter()).map(|r| r.dinkelbach_iters).max().unwrap_or(0)
}

fn iterations_to_1pct(sol: &Solution<f64>) -> usize {
    let f = sol.objective;
    sol.trace.iter().position(|r| (f - r.objective).abs() <= 1e-2 * f.abs()).unwrap_or(sol.trace.len())
}

fn median(mut v: Vec<usize>) -> f64 {
    v.sort_unstable();
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2] as f64
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2]) as f64
    }
}

struct Runs {
    unconstrained: Vec<Solution<f64>>,
    slbm: Vec<Solution<f64>>,
}

fn criterion_1(dinkelbach_peak: &mut usize) -> (Line, Runs) {
    let start = Instant::now();
    let mut bad = Vec::new();
    let mut runs = Runs { unconstrained: Vec::new(), slbm: Vec::new() };
    let cfg = SolverConfig::default();
    let mut per_alg = [0f64; 5];
    for seed in 0..20u64 {
        let sc = small(seed);
        let q0 = Blocks::uniform_full_power(&sc);
        let (qsc, qq0) = binding_instance(seed, 0.5);
        let mut timed = |i: usize, f: &dyn Fn() -> spca::Result<Solution<f64>>| {
            let t = Instant::now();
            let out = f();
            per_alg[i] += t.elapsed().as_secs_f64();
            out
        };
        let results = [
            ("gee", timed(0, &|| solve_gee(&sc, &cfg, &q0))),
            ("see", timed(1, &|| solve_see(&sc, &cfg, &q0))),
            ("slbm", timed(2, &|| solve_slbm(&sc, &SlbmConfig::default(), &q0))),
            ("gee-qos", timed(3, &|| solve_gee_qos(&qsc, &cfg, &qq0))),
            ("see-qos", timed(4, &|| solve_see_qos(&qsc, &cfg, &qq0))),
        ];
        for (name, res) in results {
            match res {
                Ok(sol) => {
                    if !monotone(&sol) {
                        bad.push(format!("{name}/{seed} not monotone"));
                    }
                    *dinkelbach_peak = (*dinkelbach_peak).max(max_dinkelbach(&[&sol]));
                    match name {
                        "gee" if seed < 10 => runs.unconstrained.push(sol),
                        "slbm" if seed < 10 => runs.slbm.push(sol),
                        _ => {}
                    }
                }
                Err(e) => bad.push(format!("{name}/{seed}: {e}")),
            }
        }
    }
    let secs = start.elapsed().as_secs_f64();
    let ok = bad.is_empty();
    let split = format!("gee {:.1}, see {:.1}, slbm {:.1}, gee-qos {:.1}, see-qos {:.1}", per_alg[0], per_alg[1], per_alg[2], per_alg[3], per_alg[4]);
    let detail = if ok {
        format!("100 runs monotone within 1e-10, {secs:.1} s (budget 60 s; {split})")
    } else {
        format!("{}; {secs:.1} s ({split})", bad.join(", "))
    };
    (line(1, ok && secs <= 60.0, !ok, detail), runs)
}

fn fd(f: impl Fn(&Blocks<f64>) -> f64, q: &Blocks<f64>, dir: &Blocks<f64>) -> f64 {
    directional(f, q, dir, 1e-5)
}

fn criterion_2() -> Line {
    let mut worst_value = 0f64;
    let mut worst_grad = 0f64;
    for seed in 0..5u64 {
        let sc = small_with_g(seed, RatePowerModel::Linear { q: 0.1 });
        let mut r = rng(900 + seed);
        for _ in 0..5 {
            let q = rand_point(&sc, &mut r);
            let dir = rand_direction(&sc, &mut r);
            let ev = Evaluation::new(&sc, q.clone()).unwrap();
            let (v, g) = gee_surrogate(&sc, &q, &q).unwrap();
            worst_value = worst_value.max((v - ev.gee()).abs());
            let d = fd(|x| gee(&sc, x), &q, &dir);
            worst_grad = worst_grad.max((g.dot(&dir) - d).abs() / d.abs().max(1e-3 * g.norm() * dir.norm()));
            let mut slope = 0.0;
            let mut scale = 0.0;
            for k in 0..sc.num_links() {
                let (v, g) = see_surrogate_k(&sc, &q[k], &q, k).unwrap();
                worst_value = worst_value.max((v - ev.rates[k] / ev.powers[k]).abs());
                slope += re_inner(&g, &dir[k]);
                scale += g.norm() * dir[k].norm();
            }
            let d = fd(|x| see(&sc, x), &q, &dir);
            worst_grad = worst_grad.max((slope - d).abs() / d.abs().max(1e-3 * scale));
        }
    }
    let ok = worst_value <= 1e-10 && worst_grad <= 1e-4;
    line(2, ok, !ok, format!("25 points: max value gap {worst_value:.1e}, max relative slope gap {worst_grad:.1e}"))
}

fn rand_psd(r: &mut rand_chacha::ChaCha8Rng, n: usize) -> CMat<f64> {
    let g = rand_mat(r, n, n);
    herm(&(&g * g.adjoint()))
}

fn criterion_3() -> Line {
    let start = Instant::now();
    let opts = PgOptions { tol: 1e-10, max_iter: 200_000, ..Default::default() };
    let mut r = rng(31);
    let mut worst_wf = 0f64;
    for i in 0..50 {
        let a = rand_psd(&mut r, 4) * cplx(1.0 + 10.0 * r.random::<f64>());
        let d = if i % 2 == 0 { rand_psd(&mut r, 4) * cplx(0.3) } else { rand_herm(&mut r, 4) };
        let p = 0.5 + 5.0 * r.random::<f64>();
        let prob = WaterfillProblem::new(a, d, p).unwrap();
        let (q, _) = waterfill(&prob, 1e-10).unwrap();
        let oracle = projected_gradient_concave(
            |x| Ok((prob.objective(&x[0])?, vec![prob.gradient(&x[0])?])),
            &[BlockSet::PsdTrace(p)],
            vec![linalg::scaled_eye(4, p / 8.0)],
            &opts,
        )
        .unwrap();
        worst_wf = worst_wf.max(oracle.value - prob.objective(&q).unwrap());
    }
    let mut worst_y = 0f64;
    for i in 0..50 {
        let lambda = if i % 5 == 0 { 0.0 } else { 3.0 * r.random::<f64>() };
        let sigma = rand_herm(&mut r, 4);
        let y_t = rand_psd(&mut r, 4);
        let c = 0.05 + r.random::<f64>();
        let s2 = 0.1 + r.random::<f64>();
        let y = y_subproblem(lambda, &sigma, &y_t, c, s2).unwrap();
        let oracle = projected_gradient_concave(
            |x| Ok((y_objective(lambda, &sigma, &y_t, c, s2, &x[0])?, vec![y_gradient(lambda, &sigma, &y_t, c, s2, &x[0])?])),
            &[BlockSet::Psd],
            vec![linalg::eye(4)],
            &opts,
        )
        .unwrap();
        worst_y = worst_y.max(oracle.value - y_objective(lambda, &sigma, &y_t, c, s2, &y).unwrap());
    }
    let secs = start.elapsed().as_secs_f64();
    let ok = worst_wf <= 1e-6 && worst_y <= 1e-6;
    line(
        3,
        ok && secs <= 120.0,
        !ok,
        format!("oracle minus closed form: waterfill {worst_wf:.1e}, y-subproblem {worst_y:.1e}; {secs:.1} s (budget 120 s)"),
    )
}

fn criterion_4(peak: usize) -> Line {
    let out = dinkelbach(
        |p: &f64| (1.0 + p).ln(),
        |p: &f64| 1.0 + p,
        |s| Ok(if s <= 0.0 { 10.0 } else { (1.0 / s - 1.0).clamp(0.0, 10.0) }),
        1e-8,
        30,
    )
    .unwrap();
    let n = 1_000_000;
    let grid = (0..=n).map(|i| 10.0 * i as f64 / n as f64).map(|p| (1.0 + p).ln() / (1.0 + p)).fold(f64::MIN, f64::max);
    let sorted = out.history.windows(2).all(|w| w[1] >= w[0]);
    let gap = (out.s - grid).abs();
    let ok = peak <= 30 && sorted && gap <= 1e-6;
    line(4, ok, !ok, format!("max inner iterations {peak} (cap 30), scalar ratio gap to grid {gap:.1e}, history nondecreasing {sorted}"))
}

struct QosRun {
    sc: Scenario<f64>,
    objective: Objective,
    sol: Solution<f64>,
}

fn criterion_5() -> (Line, Vec<QosRun>) {
    let cfg = SolverConfig::default();
    let mut worst = f64::INFINITY;
    let mut bad = Vec::new();
    let mut runs = Vec::new();
    for seed in 0..10u64 {
        let (sc, q0) = binding_instance(seed, 0.95);
        for (objective, res) in [(Objective::Gee, solve_gee_qos(&sc, &cfg, &q0)), (Objective::See, solve_see_qos(&sc, &cfg, &q0))] {
            match res {
                Ok(sol) => {
                    worst = sol.trace.iter().map(|r| r.min_rate_slack).fold(worst, f64::min);
                    runs.push(QosRun { sc: sc.clone(), objective, sol });
                }
                Err(e) => {
                    if let spca::Error::AtIteration { trace, .. } | spca::Error::OuterCap { trace, .. } = &e {
                        worst = trace.iter().map(|r| r.min_rate_slack).fold(worst, f64::min);
                    }
                    bad.push(format!("{objective:?}/{seed}: {e}"));
                }
            }
        }
    }
    let ok = worst >= -1e-9;
    let mut detail = format!("20 runs, smallest rate slack along all paths {worst:.2e}");
    if !bad.is_empty() {
        detail.push_str(&format!("; unfinished: {}", bad.join(", ")));
    }
    (line(5, ok && bad.is_empty(), !ok, detail), runs)
}

fn criterion_6(runs: &Runs) -> Line {
    let mut worst = 0f64;
    let mut off = Vec::new();
    for (seed, (a, b)) in runs.unconstrained.iter().zip(&runs.slbm).enumerate() {
        let rel = (a.objective - b.objective).abs() / b.objective;
        worst = worst.max(rel);
        if rel > 1e-2 {
            off.push(seed);
        }
    }
    let ma = median(runs.unconstrained.iter().map(iterations_to_1pct).collect());
    let mb = median(runs.slbm.iter().map(iterations_to_1pct).collect());
    let ok = off.is_empty() && ma <= mb && runs.unconstrained.len() >= 10;
    line(
        6,
        ok,
        false,
        format!("10 seeds: max relative gap {worst:.2e} (seeds above 1%: {off:?}); median iterations to 1%: gee {ma}, slbm {mb}"),
    )
}

fn criterion_7(qos: &[QosRun]) -> Line {
    // the 1e-8 margin is below what eps_outer = 1e-4 resolves, so both runs are
    // continued from their end points at a tighter tolerance
    let coarse = SolverConfig::default();
    let fine = SolverConfig { eps_outer: 1e-8, eps_dinkelbach: 1e-12, ..Default::default() };
    let mut ok_count = 0;
    let mut failures = Vec::new();
    for (i, run) in qos.iter().enumerate() {
        let seed = i / 2;
        let q0 = Blocks::uniform_full_power(&run.sc);
        let pair = match run.objective {
            Objective::Gee => solve_gee_qos(&run.sc, &fine, &run.sol.q)
                .and_then(|c| Ok((c, solve_gee(&run.sc, &coarse, &q0)?)))
                .and_then(|(c, f)| Ok((c, solve_gee(&run.sc, &fine, &f.q)?))),
            Objective::See => solve_see_qos(&run.sc, &fine, &run.sol.q)
                .and_then(|c| Ok((c, solve_see(&run.sc, &coarse, &q0)?)))
                .and_then(|(c, f)| Ok((c, solve_see(&run.sc, &fine, &f.q)?))),
        };
        match pair {
            Ok((c, f)) if c.objective <= f.objective + 1e-8 => ok_count += 1,
            Ok((c, f)) => failures.push(format!("{:?}/{seed} by {:.1e}", run.objective, c.objective - f.objective)),
            Err(e) => failures.push(format!("{:?}/{seed}: {e}", run.objective)),
        }
    }
    let mut detail = format!("{ok_count}/{} seeds ordered", qos.len());
    if !failures.is_empty() {
        detail.push_str(&format!("; constrained above unconstrained: {}", failures.join(", ")));
    }
    line(7, failures.is_empty(), false, detail)
}

fn criterion_8() -> Line {
    let start = Instant::now();
    let cfg = SolverConfig::default();
    let mut worst = 0f64;
    let mut most_iters = 0;
    let mut bad = Vec::new();
    for seed in 0..20u64 {
        let sc = generate_scenario(&GeneratorConfig::default(), seed).unwrap();
        let q0 = Blocks::uniform_full_power(&sc);
        for (name, res) in [("gee", solve_gee(&sc, &cfg, &q0)), ("see", solve_see(&sc, &cfg, &q0))] {
            match res {
                Ok(sol) => {
                    worst = worst.max(sol.trace.last().unwrap().residual);
                    most_iters = most_iters.max(sol.iterations());
                    if !monotone(&sol) || max_dinkelbach(&[&sol]) > 30 {
                        bad.push(format!("{name}/{seed} invariant"));
                    }
                }
                Err(e) => bad.push(format!("{name}/{seed}: {e}")),
            }
        }
    }
    let secs = start.elapsed().as_secs_f64();
    let ok = bad.is_empty() && worst <= 1e-4;
    let mut detail = format!("40 runs, max final residual {worst:.1e}, max iterations {most_iters}, {secs:.1} s (budget 1800 s)");
    if !bad.is_empty() {
        detail.push_str(&format!("; {}", bad.join(", ")));
    }
    line(8, ok && secs <= 1800.0, !ok, detail)
}

fn criterion_9(qos: &[QosRun]) -> Line {
    let mut worst = 0f64;
    for run in qos {
        let lambda = run.sol.last.lambda.clone().unwrap();
        let (y, duals) = recover_duals(&run.sc, run.objective, &run.sol.q, &lambda).unwrap();
        worst = worst.max(kkt_residual(&run.sc, run.objective, &run.sol.q, &y, &duals).unwrap());
    }
    let ok = worst <= 1e-2 && !qos.is_empty();
    line(9, ok, !ok, format!("{} converged runs, max KKT residual {worst:.1e} (limit 1e-2)", qos.len()))
}

fn main() {
    let mut lines = Vec::new();
    let mut peak = 0;
    let (l1, runs) = criterion_1(&mut peak);
    lines.push(l1);
    lines.push(criterion_2());
    lines.push(criterion_3());
    let (l5, qos) = criterion_5();
    lines.push(criterion_4(peak.max(qos.iter().map(|r| max_dinkelbach(&[&r.sol])).max().unwrap_or(0))));
    lines.push(l5);
    lines.push(criterion_6(&runs));
    lines.push(criterion_7(&qos));
    lines.push(criterion_8());
    lines.push(criterion_9(&qos));
    lines.sort_by_key(|l| l.id);
    for l in &lines {
        println!("criterion {}: {} {}", l.id, if l.pass { "PASS" } else { "FAIL" }, l.detail);
    }
    if lines.iter().any(|l| !l.pass && l.hard) {
        std::process::exit(1);
    }
}
