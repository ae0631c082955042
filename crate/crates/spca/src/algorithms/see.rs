//! Sum energy efficiency without QoS constraints.

use crate::error::Result;
use crate::linalg::{self, cplx, herm, re_inner, CMat};
use crate::model::{Blocks, Evaluation, Objective, Scenario};
use crate::scalar::Real;
use crate::solvers::{dinkelbach_from, waterfill, WaterfillProblem};

use super::{local_rate, local_rate_value, outer_loop, signal_curvature, BestResponse, Solution, SolverConfig};

/// Per-link pseudoconcave approximations of the SEE built at `Q^t`.
pub struct SeeSurrogate<'e, 'a, T: Real> {
    pub ev: &'e Evaluation<'a, T>,
    /// `Π_k = p_k(Q^t) · Σ_{j≠k} ∇_k (r_j/p_j)(Q^t)`.
    pub pi: Vec<CMat<T>>,
    /// `∇_k r_k(Q^t)`.
    own_grad: Vec<CMat<T>>,
    g_deriv: Vec<T>,
}

impl<'e, 'a, T: Real> SeeSurrogate<'e, 'a, T> {
    pub fn new(ev: &'e Evaluation<'a, T>) -> Self {
        let kk = ev.num_links();
        let mut pi = Vec::with_capacity(kk);
        let mut own_grad = Vec::with_capacity(kk);
        for k in 0..kk {
            let m = ev.sc.link(k).tx_antennas;
            let mut s = linalg::zeros(m, m);
            for j in 0..kk {
                if j != k {
                    s += ev.grad_ratio(k, j);
                }
            }
            pi.push(herm(&(s * cplx(ev.powers[k]))));
            own_grad.push(ev.grad_rate(k, k));
        }
        SeeSurrogate { ev, pi, own_grad, g_deriv: ev.g_derivs() }
    }

    pub fn numerator(&self, k: usize, qk: &CMat<T>) -> T {
        local_rate_value(self.ev, k, qk) + re_inner(&(qk - &self.ev.q[k]), &self.pi[k])
    }

    pub fn denominator(&self, k: usize, qk: &CMat<T>) -> T {
        let l = self.ev.sc.link(k);
        let dq = qk - &self.ev.q[k];
        l.p0 + l.rho * linalg::trace_re(qk) + l.g.eval(self.ev.rates[k]) + self.g_deriv[k] * re_inner(&dq, &self.own_grad[k])
    }

    pub fn value(&self, k: usize, qk: &CMat<T>) -> T {
        self.numerator(k, qk) / self.denominator(k, qk)
    }

    pub fn gradient(&self, k: usize, qk: &CMat<T>) -> Result<CMat<T>> {
        let num = self.numerator(k, qk);
        let den = self.denominator(k, qk);
        let (_, g) = local_rate(self.ev, k, qk)?;
        let dn = g + &self.pi[k];
        let dd = self.denominator_grad(k);
        Ok(herm(&(dn * cplx(T::one() / den) - dd * cplx(num / (den * den)))))
    }

    fn denominator_grad(&self, k: usize) -> CMat<T> {
        let l = self.ev.sc.link(k);
        &self.own_grad[k] * cplx(self.g_deriv[k]) + linalg::scaled_eye(l.tx_antennas, l.rho)
    }

    pub fn cost(&self, k: usize, s: T) -> CMat<T> {
        herm(&(self.denominator_grad(k) * cplx(s) - &self.pi[k]))
    }

    /// Per-link Dinkelbach solves; the reported iteration count is the largest.
    pub fn best_response(&self, cfg: &SolverConfig<T>) -> Result<BestResponse<T>> {
        let kk = self.ev.num_links();
        let mut bq = Vec::with_capacity(kk);
        let mut iters = 0;
        let mut s_sum = T::zero();
        for k in 0..kk {
            let a = signal_curvature(self.ev, k);
            let p = self.ev.sc.link(k).p_max;
            let out = dinkelbach_from(
                self.value(k, &self.ev.q[k]),
                |x: &CMat<T>| self.numerator(k, x),
                |x: &CMat<T>| self.denominator(k, x),
                |s| Ok(waterfill(&WaterfillProblem::new(a.clone(), self.cost(k, s), p)?, cfg.trace_tol)?.0),
                cfg.eps_dinkelbach,
                cfg.max_dinkelbach,
            )?;
            iters = iters.max(out.iters);
            s_sum += out.s;
            bq.push(out.x);
        }
        Ok(BestResponse { bq: Blocks(bq), by: None, s_star: s_sum, dinkelbach_iters: iters, dual_iters: None, lambda: None })
    }
}

/// Value and gradient of link `k`'s SEE approximation built at `q_t`, at `q_k`.
pub fn see_surrogate_k<T: Real>(sc: &Scenario<T>, q_k: &CMat<T>, q_t: &Blocks<T>, k: usize) -> Result<(T, CMat<T>)> {
    let ev = Evaluation::new(sc, q_t.clone())?;
    let sur = SeeSurrogate::new(&ev);
    Ok((sur.value(k, q_k), sur.gradient(k, q_k)?))
}

/// Successive pseudoconvex approximation for SEE maximization.
pub fn solve_see<T: Real>(sc: &Scenario<T>, cfg: &SolverConfig<T>, q0: &Blocks<T>) -> Result<Solution<T>> {
    outer_loop(sc, cfg, q0, Objective::See, false, |ev, _| SeeSurrogate::new(ev).best_response(cfg))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{generate_scenario, GeneratorConfig};

    #[test]
    fn per_link_tangency() {
        let sc: Scenario<f64> = generate_scenario(&GeneratorConfig { links: 3, tx_antennas: 3, rx_antennas: 2, ..Default::default() }, 8).unwrap();
        let q = Blocks::uniform_full_power(&sc).lerp(&Blocks::zeros(&sc), 0.5);
        let ev = Evaluation::new(&sc, q.clone()).unwrap();
        let g = ev.grad_see();
        for k in 0..3 {
            let (v, gk) = see_surrogate_k(&sc, &q[k], &q, k).unwrap();
            assert!((v - ev.rates[k] / ev.powers[k]).abs() < 1e-12);
            assert!((gk - &g[k]).norm() < 1e-10);
        }
    }

    #[test]
    fn converges_on_small_instance() {
        let sc: Scenario<f64> = generate_scenario(&GeneratorConfig { links: 3, tx_antennas: 4, rx_antennas: 2, ..Default::default() }, 1).unwrap();
        let sol = solve_see(&sc, &SolverConfig::default(), &Blocks::uniform_full_power(&sc)).unwrap();
        assert!(sol.trace.windows(2).all(|w| w[1].objective >= w[0].objective - 1e-10));
        assert!(sol.iterations() < 300);
    }
}
