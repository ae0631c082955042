//! Outer successive-approximation loops and their diagnostics.

pub mod gee;
pub mod kkt;
pub mod qos;
pub mod see;
pub mod trace;

use std::time::Instant;

use crate::error::{Error, Result};
use crate::linalg::{self, herm, CMat};
use crate::model::{Blocks, Evaluation, Objective, Scenario};
use crate::scalar::Real;
use crate::solvers::armijo_linesearch;

pub use gee::{gee_surrogate, solve_gee, GeeSurrogate};
pub use kkt::{kkt_residual, recover_duals, stationarity_residual, KktDuals};
pub use qos::{solve_gee_qos, solve_see_qos, QosProblem};
pub use see::{see_surrogate_k, solve_see, SeeSurrogate};
pub use trace::IterationRecord;

/// Inner solver for the convex approximate problems with QoS constraints.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum QosInnerMethod {
    /// Method of multipliers on the QoS constraints with a barrier Newton
    /// primal solve.
    #[default]
    AugmentedLagrangian,
    /// Lagrangian dual decomposition over `(λ, Σ)` with per-link closed-form
    /// primal recovery and diminishing projected-gradient steps.
    DualDecomposition,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig<T> {
    /// Outer stop: `‖BQ^t − Q^t‖_F ≤ eps_outer`.
    pub eps_outer: T,
    pub eps_dinkelbach: T,
    /// Inner dual stop (change of the multipliers).
    pub eps_dual: T,
    pub alpha: T,
    pub beta: T,
    /// Regularization weight of `‖Y − Y^t‖²`. `None` means `1e-2 / Σ_k ‖Y_k‖_F²`
    /// with `Y_k` evaluated at uniform full power.
    pub c: Option<T>,
    pub dual_step0: T,
    pub max_outer: usize,
    pub max_dinkelbach: usize,
    pub max_dual: usize,
    /// Relative trace tolerance of the waterfilling multiplier search.
    pub trace_tol: T,
    pub qos_method: QosInnerMethod,
    /// Reuse the multipliers of the previous inner solve as the starting point.
    pub warm_start_duals: bool,
    /// Projected-gradient stopping tolerance for coupled inner problems.
    pub pg_tol: T,
    pub max_pg: usize,
}

impl<T: Real> Default for SolverConfig<T> {
    fn default() -> Self {
        SolverConfig {
            eps_outer: T::lit(1e-4),
            eps_dinkelbach: T::lit(1e-8),
            eps_dual: T::lit(1e-6),
            alpha: T::lit(0.01),
            beta: T::lit(0.5),
            c: None,
            dual_step0: T::one(),
            max_outer: 1000,
            max_dinkelbach: 50,
            max_dual: 5000,
            trace_tol: T::lit(1e-8),
            qos_method: QosInnerMethod::AugmentedLagrangian,
            warm_start_duals: false,
            pg_tol: T::lit(1e-9),
            max_pg: 50_000,
        }
    }
}

impl<T: Real> SolverConfig<T> {
    pub fn validate(&self) -> Result<()> {
        let unit = |v: T| v > T::zero() && v < T::one();
        if !unit(self.alpha) || !unit(self.beta) {
            return Err(Error::Config("need 0 < alpha < 1 and 0 < beta < 1".into()));
        }
        let positive = [self.eps_outer, self.eps_dinkelbach, self.eps_dual, self.dual_step0, self.trace_tol, self.pg_tol];
        if positive.iter().any(|&v| !(v > T::zero())) {
            return Err(Error::Config("tolerances and the dual step must be positive".into()));
        }
        if let Some(c) = self.c {
            if !(c >= T::zero()) {
                return Err(Error::Config("c must be nonnegative".into()));
            }
        }
        if self.max_outer == 0 || self.max_dinkelbach == 0 || self.max_dual == 0 || self.max_pg == 0 {
            return Err(Error::Config("iteration caps must be positive".into()));
        }
        Ok(())
    }

    pub fn regularization(&self, sc: &Scenario<T>) -> T {
        self.c.unwrap_or_else(|| {
            let y = sc.aux_covs(&Blocks::uniform_full_power(sc));
            let scale = y.iter().fold(T::zero(), |a, m| a + linalg::fro_norm2(m));
            T::lit(1e-2) / scale.max(T::lit(1e-300))
        })
    }
}

/// Output of one approximate-problem solve.
#[derive(Debug, Clone)]
pub struct BestResponse<T: Real> {
    pub bq: Blocks<T>,
    pub by: Option<Blocks<T>>,
    pub s_star: T,
    pub dinkelbach_iters: usize,
    pub dual_iters: Option<usize>,
    /// Multipliers of the surrogate QoS constraints, scaled to the original objective.
    pub lambda: Option<Vec<T>>,
}

#[derive(Debug, Clone)]
pub struct Solution<T: Real> {
    pub q: Blocks<T>,
    /// `Y_k = Σ_j H_kj Q_j H_kjᴴ` at the final point (QoS algorithms only).
    pub y: Option<Blocks<T>>,
    pub objective: T,
    pub trace: Vec<IterationRecord>,
    /// Best response computed at the final point.
    pub last: BestResponse<T>,
}

impl<T: Real> Solution<T> {
    pub fn iterations(&self) -> usize {
        self.trace.len().saturating_sub(1)
    }
}

/// `log det(R_k^t + H_kk Q_k H_kkᴴ) − log det R_k^t` and its gradient in `Q_k`.
pub(crate) fn local_rate<T: Real>(ev: &Evaluation<'_, T>, k: usize, qk: &CMat<T>) -> Result<(T, CMat<T>)> {
    let h = ev.sc.channel(k, k);
    let s = herm(&(&ev.r_cov[k] + crate::model::sandwich(h, qk)));
    let ld = linalg::logdet_hpd(&s)?;
    let inv = linalg::inv_hpd(&s)?;
    Ok((ld - ev.logdet_r[k], crate::model::back_sandwich(h, &inv)))
}

pub(crate) fn local_rate_value<T: Real>(ev: &Evaluation<'_, T>, k: usize, qk: &CMat<T>) -> T {
    let h = ev.sc.channel(k, k);
    let s = herm(&(&ev.r_cov[k] + crate::model::sandwich(h, qk)));
    linalg::logdet_hpd(&s).map(|ld| ld - ev.logdet_r[k]).unwrap_or_else(|_| T::lit(f64::NAN))
}

/// `H_kkᴴ R_k⁻¹ H_kk`.
pub(crate) fn signal_curvature<T: Real>(ev: &Evaluation<'_, T>, k: usize) -> CMat<T> {
    crate::model::back_sandwich(ev.sc.channel(k, k), &ev.r_inv[k])
}

pub(crate) fn record<T: Real>(
    ev: &Evaluation<'_, T>,
    t: usize,
    objective: T,
    residual: T,
    br: &BestResponse<T>,
    start: Instant,
) -> IterationRecord {
    let slack = ev
        .rates
        .iter()
        .zip(ev.sc.links())
        .map(|(&r, l)| (r - l.r_min).as_f64())
        .fold(f64::INFINITY, f64::min);
    IterationRecord {
        t,
        objective: objective.as_f64(),
        gamma: 0.0,
        residual: residual.as_f64(),
        rates: ev.rates.iter().map(|r| r.as_f64()).collect(),
        min_rate_slack: slack,
        dinkelbach_iters: br.dinkelbach_iters,
        dual_iters: br.dual_iters.unwrap_or(0),
        ms: start.elapsed().as_secs_f64() * 1e3,
    }
}

/// Shared outer loop: best response, stationarity test, Armijo step on the
/// original objective, update.
pub(crate) fn outer_loop<T: Real>(
    sc: &Scenario<T>,
    cfg: &SolverConfig<T>,
    q0: &Blocks<T>,
    objective: Objective,
    with_aux: bool,
    mut best_response: impl FnMut(&Evaluation<'_, T>, usize) -> Result<BestResponse<T>>,
) -> Result<Solution<T>> {
    cfg.validate()?;
    q0.check_power_feasible(sc, T::lit(1e-10))?;
    let start = Instant::now();
    let mut q = q0.clone();
    let mut trace: Vec<IterationRecord> = Vec::new();
    let wrap = |t: usize, trace: &[IterationRecord], e: Error| Error::AtIteration { t, trace: trace.to_vec(), source: Box::new(e) };
    for t in 0..cfg.max_outer {
        let ev = Evaluation::new(sc, q.clone()).map_err(|e| wrap(t, &trace, e))?;
        let f0 = objective.value(&ev);
        let br = best_response(&ev, t).map_err(|e| wrap(t, &trace, e))?;
        let residual = q.dist(&br.bq);
        let mut rec = record(&ev, t, f0, residual, &br, start);
        if residual <= cfg.eps_outer {
            trace.push(rec);
            let y = with_aux.then(|| sc.aux_covs(&q));
            return Ok(Solution { q, y, objective: f0, trace, last: br });
        }
        let grad = objective.gradient(&ev);
        let dir = br.bq.sub(&q);
        let slope = grad.dot(&dir);
        // a direction this flat cannot be resolved by the line search: stationary to working precision
        if slope.abs() <= T::default_epsilon() * T::lit(16.0) * f0.abs().max(T::one()) {
            trace.push(rec);
            let y = with_aux.then(|| sc.aux_covs(&q));
            return Ok(Solution { q, y, objective: f0, trace, last: br });
        }
        let step = armijo_linesearch(
            |g| {
                let cand = q.lerp(&br.bq, g);
                Ok(objective.value(&Evaluation::new(sc, cand)?))
            },
            f0,
            slope,
            cfg.alpha,
            cfg.beta,
        );
        let step = match step {
            Ok(s) => s,
            Err(e) => {
                trace.push(rec);
                return Err(wrap(t, &trace, e));
            }
        };
        rec.gamma = step.gamma.as_f64();
        trace.push(rec);
        q = q.lerp(&br.bq, step.gamma);
    }
    Err(Error::OuterCap { iters: cfg.max_outer, trace })
}
