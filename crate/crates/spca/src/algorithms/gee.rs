//! Global energy efficiency without QoS constraints.

use crate::error::Result;
use crate::linalg::{self, cplx, herm, re_inner, CMat};
use crate::model::{Blocks, Evaluation, Objective, Scenario};
use crate::scalar::Real;
use crate::solvers::{dinkelbach_from, waterfill, WaterfillProblem};

use super::{local_rate, local_rate_value, outer_loop, signal_curvature, BestResponse, Solution, SolverConfig};

/// Pseudoconcave approximation of the GEE built at `Q^t`.
///
/// Numerator: each link's own rate with the interference frozen at `Q^t`,
/// plus the linearized effect of `Q_k` on the other links' rates.
/// Denominator: total power with `g_j(r_j)` linearized.
pub struct GeeSurrogate<'e, 'a, T: Real> {
    pub ev: &'e Evaluation<'a, T>,
    /// `Σ_{j≠k} ∇_k r_j(Q^t)`.
    pub interference: Vec<CMat<T>>,
    /// `Σ_j g_j' ∇_k r_j(Q^t)`.
    pub rate_power: Vec<CMat<T>>,
    /// `Σ_k (P0_k + g_k(r_k(Q^t)))`.
    pub static_power: T,
}

impl<'e, 'a, T: Real> GeeSurrogate<'e, 'a, T> {
    pub fn new(ev: &'e Evaluation<'a, T>) -> Self {
        let kk = ev.num_links();
        let rg = ev.rate_grads();
        let gd = ev.g_derivs();
        let mut interference = Vec::with_capacity(kk);
        let mut rate_power = Vec::with_capacity(kk);
        for k in 0..kk {
            let m = ev.sc.link(k).tx_antennas;
            let mut li = linalg::zeros(m, m);
            let mut rp = linalg::zeros(m, m);
            for j in 0..kk {
                if j != k {
                    li += &rg[k][j];
                }
                if gd[j] != T::zero() {
                    rp += &rg[k][j] * cplx(gd[j]);
                }
            }
            interference.push(herm(&li));
            rate_power.push(herm(&rp));
        }
        let static_power = ev
            .sc
            .links()
            .iter()
            .zip(&ev.rates)
            .fold(T::zero(), |a, (l, &r)| a + l.p0 + l.g.eval(r));
        GeeSurrogate { ev, interference, rate_power, static_power }
    }

    pub fn numerator(&self, q: &Blocks<T>) -> T {
        (0..self.ev.num_links()).fold(T::zero(), |acc, k| {
            acc + local_rate_value(self.ev, k, &q[k]) + re_inner(&(&q[k] - &self.ev.q[k]), &self.interference[k])
        })
    }

    pub fn denominator(&self, q: &Blocks<T>) -> T {
        (0..self.ev.num_links()).fold(self.static_power, |acc, k| {
            acc + self.ev.sc.link(k).rho * linalg::trace_re(&q[k]) + re_inner(&(&q[k] - &self.ev.q[k]), &self.rate_power[k])
        })
    }

    pub fn value(&self, q: &Blocks<T>) -> T {
        self.numerator(q) / self.denominator(q)
    }

    pub fn gradient(&self, q: &Blocks<T>) -> Result<Blocks<T>> {
        let num = self.numerator(q);
        let den = self.denominator(q);
        let mut out = Vec::with_capacity(q.len());
        for k in 0..q.len() {
            let (_, g) = local_rate(self.ev, k, &q[k])?;
            let dn = g + &self.interference[k];
            let dd = self.denominator_grad(k);
            out.push(herm(&(dn * cplx(T::one() / den) - dd * cplx(num / (den * den)))));
        }
        Ok(Blocks(out))
    }

    fn denominator_grad(&self, k: usize) -> CMat<T> {
        let m = self.ev.sc.link(k).tx_antennas;
        &self.rate_power[k] + linalg::scaled_eye(m, self.ev.sc.link(k).rho)
    }

    /// Linear cost of the parametric problem `max N − s·D` for link `k`.
    pub fn cost(&self, k: usize, s: T) -> CMat<T> {
        herm(&(self.denominator_grad(k) * cplx(s) - &self.interference[k]))
    }

    /// Maximizer of `N − s·D` by per-link waterfilling.
    pub fn parametric(&self, s: T, trace_tol: T) -> Result<Blocks<T>> {
        let mut out = Vec::with_capacity(self.ev.num_links());
        for k in 0..self.ev.num_links() {
            let prob = WaterfillProblem::new(signal_curvature(self.ev, k), self.cost(k, s), self.ev.sc.link(k).p_max)?;
            out.push(waterfill(&prob, trace_tol)?.0);
        }
        Ok(Blocks(out))
    }

    pub fn best_response(&self, cfg: &SolverConfig<T>) -> Result<BestResponse<T>> {
        let out = dinkelbach_from(
            self.value(&self.ev.q),
            |x: &Blocks<T>| self.numerator(x),
            |x: &Blocks<T>| self.denominator(x),
            |s| self.parametric(s, cfg.trace_tol),
            cfg.eps_dinkelbach,
            cfg.max_dinkelbach,
        )?;
        Ok(BestResponse { bq: out.x, by: None, s_star: out.s, dinkelbach_iters: out.iters, dual_iters: None, lambda: None })
    }
}

/// Value and gradient of the GEE approximation built at `q_t`, evaluated at `q`.
pub fn gee_surrogate<T: Real>(sc: &Scenario<T>, q: &Blocks<T>, q_t: &Blocks<T>) -> Result<(T, Blocks<T>)> {
    let ev = Evaluation::new(sc, q_t.clone())?;
    let sur = GeeSurrogate::new(&ev);
    Ok((sur.value(q), sur.gradient(q)?))
}

/// Successive pseudoconvex approximation for GEE maximization.
pub fn solve_gee<T: Real>(sc: &Scenario<T>, cfg: &SolverConfig<T>, q0: &Blocks<T>) -> Result<Solution<T>> {
    outer_loop(sc, cfg, q0, Objective::Gee, false, |ev, _| GeeSurrogate::new(ev).best_response(cfg))
}
