//! GEE and SEE maximization with per-link minimum-rate constraints.
//!
//! Each outer iteration maximizes a concave (SEE) or concave-over-linear
//! (GEE, via Dinkelbach) approximation over the inner approximation of the
//! QoS set, in which the interference term `r_k⁻` is replaced by its
//! linearization at `Q^t`. The auxiliary `Y_k` are kept equal to
//! `Σ_j H_kj Q_j H_kjᴴ`, so the regularizer `c‖Y_k − Y_k^t‖²` acts on `Q`.

use std::cell::RefCell;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::linalg::{self, cplx, herm, re_inner, CMat};
use crate::model::{back_sandwich, grad_rate_minus, sandwich, Blocks, Evaluation, Objective, Scenario};
use crate::scalar::Real;
use crate::solvers::barrier::SecondOrder;
use crate::solvers::{barrier_maximize, dinkelbach_from, waterfill, y_subproblem, BarrierOptions, BlockLayout, WaterfillProblem};

use super::gee::GeeSurrogate;
use super::see::SeeSurrogate;
use super::{local_rate_value, outer_loop, signal_curvature, BestResponse, QosInnerMethod, Solution, SolverConfig};

/// Concave approximate problem at `Q^t`:
///
/// maximize `Σ_k [w_k ř_k(Q_k) − inner(C_k, Q_k − Q_k^t)] − c Σ_k ‖Y_k(Q) − Y_k^t‖²`
/// subject to `h_k(Q) ≥ 0` and the power budgets, where `ř_k` is link `k`'s
/// rate with interference frozen at `Q^t` and
/// `h_k(Q) = log det(σ_k² I + Y_k(Q)) − r̄_k⁻(Q; Q^t) − R_k`.
pub struct QosProblem<'e, 'a, T: Real> {
    pub ev: &'e Evaluation<'a, T>,
    pub weight: Vec<T>,
    pub cost: Vec<CMat<T>>,
    pub c: T,
    pub y_t: Blocks<T>,
    /// `H_kjᴴ (R_k^t)⁻¹ H_kj`, indexed `[k][j]`; the diagonal is unused.
    g_minus: Vec<Vec<CMat<T>>>,
    /// Hessian of `−c Σ_k ‖Y_k(Q) − Y_k^t‖²`, which does not depend on `Q`.
    reg_hess: DMatrix<T>,
    layout: BlockLayout,
}

/// Result of one inner solve at fixed costs.
#[derive(Debug, Clone)]
pub struct InnerOutcome<T: Real> {
    pub q: Blocks<T>,
    pub lambda: Vec<T>,
    pub sigma: Option<Vec<CMat<T>>>,
    pub iters: usize,
}

impl<'e, 'a, T: Real> QosProblem<'e, 'a, T> {
    pub fn new(ev: &'e Evaluation<'a, T>, weight: Vec<T>, cost: Vec<CMat<T>>, c: T) -> Self {
        let sc = ev.sc;
        let kk = sc.num_links();
        let g_minus = (0..kk)
            .map(|k| {
                (0..kk)
                    .map(|j| if j == k { CMat::zeros(0, 0) } else { grad_rate_minus(sc, &ev.r_inv[k], k, j) })
                    .collect()
            })
            .collect();
        let layout = BlockLayout::new(&sc.links().iter().map(|l| l.tx_antennas).collect::<Vec<_>>());
        let mut reg_hess = DMatrix::zeros(layout.dim, layout.dim);
        if c > T::zero() {
            for k in 0..kk {
                for j in 0..kk {
                    for m in j..kk {
                        layout.add_quad_form(&mut reg_hess, j, m, &(sc.channel(k, j).adjoint() * sc.channel(k, m)), -T::lit(2.0) * c);
                    }
                }
            }
        }
        QosProblem { ev, weight, cost, c, y_t: sc.aux_covs(&ev.q), g_minus, reg_hess, layout }
    }

    fn sc(&self) -> &'a Scenario<T> {
        self.ev.sc
    }

    fn kk(&self) -> usize {
        self.ev.num_links()
    }

    /// `h_k(Q)` for every link.
    pub fn constraints(&self, q: &Blocks<T>) -> Result<Vec<T>> {
        let y = self.sc().aux_covs(q);
        (0..self.kk()).map(|k| self.constraint(q, &y[k], k)).collect()
    }

    fn constraint(&self, q: &Blocks<T>, y_k: &CMat<T>, k: usize) -> Result<T> {
        let l = self.sc().link(k);
        let mut v = linalg::logdet_hpd(&(y_k + linalg::scaled_eye(l.rx_antennas, l.sigma2)))? - self.ev.logdet_r[k] - l.r_min;
        for j in 0..self.kk() {
            if j != k {
                v -= re_inner(&(&q[j] - &self.ev.q[j]), &self.g_minus[k][j]);
            }
        }
        Ok(v)
    }

    pub fn regularizer(&self, q: &Blocks<T>) -> T {
        let y = self.sc().aux_covs(q);
        (0..self.kk()).fold(T::zero(), |a, k| a + self.c * linalg::fro_norm2(&(&y[k] - &self.y_t[k])))
    }

    pub fn objective(&self, q: &Blocks<T>) -> T {
        let lin = (0..self.kk()).fold(T::zero(), |a, k| {
            a + self.weight[k] * local_rate_value(self.ev, k, &q[k]) - re_inner(&self.cost[k], &(&q[k] - &self.ev.q[k]))
        });
        lin - self.regularizer(q)
    }

    /// Augmented Lagrangian `F(Q) − (1/2ρ) Σ_k ([λ_k − ρ h_k]₊² − λ_k²)`, with
    /// gradient and Hessian when `derivs` is set.
    fn augmented(&self, q: &[CMat<T>], lambda: &[T], rho: T, derivs: bool) -> Result<SecondOrder<T>> {
        let layout = &self.layout;
        let sc = self.sc();
        let kk = self.kk();
        let q = Blocks(q.to_vec());
        let mut value = T::zero();
        let mut grad: Vec<CMat<T>> = Vec::with_capacity(kk);
        let mut hess = if derivs { self.reg_hess.clone() } else { DMatrix::zeros(0, 0) };
        for j in 0..kk {
            let h = sc.channel(j, j);
            let s = herm(&(&self.ev.r_cov[j] + sandwich(h, &q[j])));
            let dq = &q[j] - &self.ev.q[j];
            value += self.weight[j] * (linalg::logdet_hpd(&s)? - self.ev.logdet_r[j]) - re_inner(&self.cost[j], &dq);
            if derivs {
                let x = back_sandwich_rect(h, &linalg::inv_hpd(&s)?, h);
                layout.add_quad_form(&mut hess, j, j, &x, -self.weight[j]);
                grad.push(x * cplx(self.weight[j]) - &self.cost[j]);
            }
        }
        let half = T::lit(0.5);
        let two_c = T::lit(2.0) * self.c;
        for k in 0..kk {
            let l = sc.link(k);
            let y_k = sc.aux_cov(&q, k);
            let dy = &y_k - &self.y_t[k];
            value -= self.c * linalg::fro_norm2(&dy);
            let shifted = herm(&(&y_k + linalg::scaled_eye(l.rx_antennas, l.sigma2)));
            let h = linalg::logdet_hpd(&shifted)? - self.ev.logdet_r[k] - l.r_min
                - (0..kk).filter(|&j| j != k).fold(T::zero(), |a, j| a + re_inner(&(&q[j] - &self.ev.q[j]), &self.g_minus[k][j]));
            let coef = (lambda[k] - rho * h).max(T::zero());
            value -= half / rho * (coef * coef - lambda[k] * lambda[k]);
            if !derivs {
                continue;
            }
            let inv = (coef > T::zero()).then(|| linalg::inv_hpd(&shifted)).transpose()?;
            let mut x = dy * cplx(-two_c);
            if let Some(inv) = &inv {
                x += inv * cplx(coef);
            }
            // ∇h_k, needed for the rank-one part of the penalty Hessian
            let mut dh: Vec<CMat<T>> = Vec::new();
            for (j, gj) in grad.iter_mut().enumerate() {
                *gj += back_sandwich(sc.channel(k, j), &x);
                if j != k && coef > T::zero() {
                    *gj -= &self.g_minus[k][j] * cplx(coef);
                }
                if let Some(inv) = &inv {
                    let mut d = back_sandwich(sc.channel(k, j), inv);
                    if j != k {
                        d -= &self.g_minus[k][j];
                    }
                    dh.push(d);
                }
            }
            for j in 0..kk {
                for m in j..kk {
                    let (hj, hm) = (sc.channel(k, j), sc.channel(k, m));
                    if let Some(inv) = &inv {
                        layout.add_quad_form(&mut hess, j, m, &back_sandwich_rect(hj, inv, hm), -coef);
                    }
                }
            }
            if !dh.is_empty() {
                let v = layout.to_vector(&dh);
                hess.ger(-rho, &v, &v, T::one());
            }
        }
        let grad = grad.into_iter().map(|g| herm(&g)).collect();
        Ok((value, grad, hess))
    }

    fn budgets(&self) -> Vec<T> {
        self.sc().links().iter().map(|l| l.p_max).collect()
    }

    /// Method of multipliers on the QoS constraints; each primal problem is
    /// solved by a log-barrier Newton method started between `start` and the
    /// scaled identity.
    ///
    /// Stops once every multiplier update is below `ρ·eps_dual`, i.e. each
    /// constraint is satisfied to `eps_dual` and complementary.
    pub fn solve_augmented(&self, start: &Blocks<T>, lambda0: &[T], cfg: &SolverConfig<T>) -> Result<InnerOutcome<T>> {
        let sc = self.sc();
        let budgets = self.budgets();
        let opts = BarrierOptions { gap_tol: cfg.pg_tol, ..BarrierOptions::default() };
        let quarter = T::lit(0.25);
        let x0: Vec<CMat<T>> = start
            .iter()
            .zip(sc.links())
            .map(|(b, l)| b * cplx(T::lit(0.5)) + linalg::scaled_eye(l.tx_antennas, quarter * l.p_max / T::from_usize(l.tx_antennas).unwrap()))
            .collect();
        let mut lambda = lambda0.to_vec();
        let mut rho = T::lit(10.0);
        let mut prev_viol = T::lit(f64::INFINITY);
        for it in 1..=cfg.max_dual {
            let out = barrier_maximize(|x, d| self.augmented(x, &lambda, rho, d), &budgets, x0.clone(), &opts)?;
            let q = Blocks(out.x);
            let h = self.constraints(&q)?;
            let mut delta = T::zero();
            let mut viol = T::zero();
            for k in 0..lambda.len() {
                let next = (lambda[k] - rho * h[k]).max(T::zero());
                delta = delta.max((next - lambda[k]).abs());
                viol = viol.max(-h[k]);
                lambda[k] = next;
            }
            if delta <= rho * cfg.eps_dual {
                return Ok(InnerOutcome { q, lambda, sigma: None, iters: it });
            }
            if viol > quarter * prev_viol && rho < T::lit(1e8) {
                rho *= T::lit(10.0);
            }
            prev_viol = viol;
        }
        Err(Error::convergence("augmented Lagrangian", cfg.max_dual))
    }

    /// Lagrangian dual decomposition over `(λ, Σ)`: per-link waterfilling for
    /// `Q`, closed-form `Y`, projected-gradient dual updates with step
    /// `ζ0/(1+υ)`. Stops when `‖(Δλ, ΔΣ)‖ ≤ eps_dual`.
    pub fn solve_dual(&self, lambda0: &[T], sigma0: Option<&[CMat<T>]>, cfg: &SolverConfig<T>) -> Result<InnerOutcome<T>> {
        if !(self.c > T::zero()) {
            return Err(Error::Config("dual decomposition needs c > 0".into()));
        }
        let sc = self.sc();
        let kk = self.kk();
        let mut lambda = lambda0.to_vec();
        let mut sigma: Vec<CMat<T>> = match sigma0 {
            Some(s) => s.to_vec(),
            None => (0..kk).map(|k| linalg::zeros(sc.link(k).rx_antennas, sc.link(k).rx_antennas)).collect(),
        };
        let curv: Vec<CMat<T>> = (0..kk).map(|k| signal_curvature(self.ev, k)).collect();
        for it in 0..cfg.max_dual {
            let mut ql = Vec::with_capacity(kk);
            for j in 0..kk {
                let mut d = self.cost[j].clone();
                for i in 0..kk {
                    d -= back_sandwich(sc.channel(i, j), &sigma[i]);
                    if i != j {
                        d += &self.g_minus[i][j] * cplx(lambda[i]);
                    }
                }
                let prob = WaterfillProblem::new(curv[j].clone(), d * cplx(T::one() / self.weight[j]), sc.link(j).p_max)?;
                ql.push(waterfill(&prob, cfg.trace_tol)?.0);
            }
            let ql = Blocks(ql);
            let step = cfg.dual_step0 / T::from_usize(it + 1).unwrap();
            let mut change = T::zero();
            for k in 0..kk {
                let l = sc.link(k);
                let yl = y_subproblem(lambda[k], &sigma[k], &self.y_t[k], self.c, l.sigma2)?;
                let slack = self.constraint(&ql, &yl, k)?;
                let next = (lambda[k] - step * slack).max(T::zero());
                change += (next - lambda[k]) * (next - lambda[k]);
                lambda[k] = next;
                let ds = (yl - sc.aux_cov(&ql, k)) * cplx(step);
                change += linalg::fro_norm2(&ds);
                sigma[k] = herm(&(&sigma[k] + ds));
            }
            if change.sqrt() <= cfg.eps_dual {
                return Ok(InnerOutcome { q: ql, lambda, sigma: Some(sigma), iters: it + 1 });
            }
        }
        Err(Error::convergence("dual decomposition", cfg.max_dual))
    }

    /// Pulls `b` back toward `Q^t` until every surrogate constraint holds.
    ///
    /// `Q^t` itself is feasible and the constraints are concave, so the
    /// feasible part of the segment is an interval containing 0.
    pub fn restore(&self, b: Blocks<T>) -> Result<Blocks<T>> {
        let min_h = |q: &Blocks<T>| -> Result<T> { Ok(self.constraints(q)?.into_iter().fold(T::lit(f64::INFINITY), |a, v| a.min(v))) };
        if min_h(&b)? >= T::zero() {
            return Ok(b);
        }
        let (mut lo, mut hi) = (T::zero(), T::one());
        for _ in 0..60 {
            let mid = (lo + hi) * T::lit(0.5);
            if min_h(&self.ev.q.lerp(&b, mid))? >= T::zero() {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Ok(self.ev.q.lerp(&b, lo))
    }

    /// `seed` (an earlier solve of the same best response) takes precedence
    /// over the previous outer iteration's multipliers.
    fn inner(&self, start: &Blocks<T>, warm: &RefCell<Option<InnerOutcome<T>>>, seed: Option<InnerOutcome<T>>, cfg: &SolverConfig<T>) -> Result<InnerOutcome<T>> {
        let kk = self.kk();
        let prev = seed.or_else(|| if cfg.warm_start_duals { warm.borrow().clone() } else { None });
        let lambda0 = prev.as_ref().map(|p| p.lambda.clone()).unwrap_or_else(|| vec![T::zero(); kk]);
        let out = match cfg.qos_method {
            QosInnerMethod::AugmentedLagrangian => self.solve_augmented(start, &lambda0, cfg)?,
            QosInnerMethod::DualDecomposition => self.solve_dual(&lambda0, prev.as_ref().and_then(|p| p.sigma.as_deref()), cfg)?,
        };
        *warm.borrow_mut() = Some(out.clone());
        Ok(out)
    }
}

/// `Aᴴ X B`.
fn back_sandwich_rect<T: Real>(a: &CMat<T>, x: &CMat<T>, b: &CMat<T>) -> CMat<T> {
    a.adjoint() * x * b
}

fn check_qos_feasible<T: Real>(sc: &Scenario<T>, q0: &Blocks<T>) -> Result<()> {
    let ev = Evaluation::new(sc, q0.clone())?;
    let slacks: Vec<f64> = ev.rates.iter().zip(sc.links()).map(|(&r, l)| (r - l.r_min).as_f64()).collect();
    if slacks.iter().any(|&s| s < 0.0) {
        return Err(Error::Precondition(format!("initial point violates the rate targets, slacks {slacks:?}")));
    }
    Ok(())
}

/// Best response of the GEE approximation over the inner QoS set.
pub fn gee_qos_best_response<T: Real>(
    ev: &Evaluation<'_, T>,
    cfg: &SolverConfig<T>,
    warm: &RefCell<Option<InnerOutcome<T>>>,
) -> Result<BestResponse<T>> {
    let kk = ev.num_links();
    let gs = GeeSurrogate::new(ev);
    let c = cfg.regularization(ev.sc);
    let mut prob = QosProblem::new(ev, vec![T::one(); kk], (0..kk).map(|k| gs.cost(k, T::zero())).collect(), c);
    let last: RefCell<Option<InnerOutcome<T>>> = RefCell::new(None);
    let inner_iters = RefCell::new(0usize);
    let out = {
        let prob_ref = &mut prob;
        let cost_cell = RefCell::new(prob_ref);
        // Q^t is feasible, so its ratio is a valid start
        dinkelbach_from(
            gs.numerator(&ev.q) / gs.denominator(&ev.q),
            |x: &Blocks<T>| gs.numerator(x) - cost_cell.borrow().regularizer(x),
            |x: &Blocks<T>| gs.denominator(x),
            |s| {
                let mut p = cost_cell.borrow_mut();
                p.cost = (0..kk).map(|k| gs.cost(k, s)).collect();
                let seed = last.borrow().clone();
                let start = seed.as_ref().map(|o| o.q.clone()).unwrap_or_else(|| ev.q.clone());
                let o = p.inner(&start, warm, seed, cfg)?;
                *inner_iters.borrow_mut() += o.iters;
                *last.borrow_mut() = Some(o.clone());
                Ok(o.q)
            },
            cfg.eps_dinkelbach,
            cfg.max_dinkelbach,
        )?
    };
    let bq = prob.restore(out.x)?;
    let den = gs.denominator(&bq);
    let lambda = last.into_inner().map(|o| o.lambda.into_iter().map(|l| l / den).collect());
    Ok(BestResponse {
        by: Some(ev.sc.aux_covs(&bq)),
        bq,
        s_star: out.s,
        dinkelbach_iters: out.iters,
        dual_iters: Some(inner_iters.into_inner()),
        lambda,
    })
}

/// Best response of the concave SEE approximation over the inner QoS set.
pub fn see_qos_best_response<T: Real>(
    ev: &Evaluation<'_, T>,
    cfg: &SolverConfig<T>,
    warm: &RefCell<Option<InnerOutcome<T>>>,
) -> Result<BestResponse<T>> {
    let kk = ev.num_links();
    let ss = SeeSurrogate::new(ev);
    let weight: Vec<T> = ev.powers.iter().map(|&p| T::one() / p).collect();
    // cost = −(Π_k/p_k − (r_k/p_k²) ∇_k p_k)
    let cost = (0..kk)
        .map(|k| {
            let p = ev.powers[k];
            herm(&(ev.grad_power(k, k) * cplx(ev.rates[k] / (p * p)) - &ss.pi[k] * cplx(T::one() / p)))
        })
        .collect();
    let prob = QosProblem::new(ev, weight, cost, cfg.regularization(ev.sc));
    let out = prob.inner(&ev.q, warm, None, cfg)?;
    let value = prob.objective(&out.q);
    let bq = prob.restore(out.q)?;
    Ok(BestResponse {
        by: Some(ev.sc.aux_covs(&bq)),
        bq,
        s_star: value,
        dinkelbach_iters: 0,
        dual_iters: Some(out.iters),
        lambda: Some(out.lambda),
    })
}

/// GEE maximization subject to `r_k(Q) ≥ R_k`, from a feasible `q0`.
pub fn solve_gee_qos<T: Real>(sc: &Scenario<T>, cfg: &SolverConfig<T>, q0: &Blocks<T>) -> Result<Solution<T>> {
    check_qos_feasible(sc, q0)?;
    let warm = RefCell::new(None);
    outer_loop(sc, cfg, q0, Objective::Gee, true, |ev, _| gee_qos_best_response(ev, cfg, &warm))
}

/// SEE maximization subject to `r_k(Q) ≥ R_k`, from a feasible `q0`.
pub fn solve_see_qos<T: Real>(sc: &Scenario<T>, cfg: &SolverConfig<T>, q0: &Blocks<T>) -> Result<Solution<T>> {
    check_qos_feasible(sc, q0)?;
    let warm = RefCell::new(None);
    outer_loop(sc, cfg, q0, Objective::See, true, |ev, _| see_qos_best_response(ev, cfg, &warm))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{generate_scenario, GeneratorConfig, RateTargets};
    use crate::solvers::barrier::{coords_to_herm, herm_dim};

    fn instance(seed: u64) -> Scenario<f64> {
        let cfg = GeneratorConfig { links: 3, tx_antennas: 3, rx_antennas: 2, targets: RateTargets::FractionOfUniformPower(0.8), ..Default::default() };
        generate_scenario(&cfg, seed).unwrap()
    }

    #[test]
    fn augmented_derivatives_match_differences() {
        let sc = instance(1);
        let qt = Blocks::uniform_full_power(&sc).lerp(&Blocks::zeros(&sc), 0.3);
        let ev = Evaluation::new(&sc, qt.clone()).unwrap();
        let gs = GeeSurrogate::new(&ev);
        let prob = QosProblem::new(&ev, vec![1.0; 3], (0..3).map(|k| gs.cost(k, 0.2)).collect(), 0.05);
        let layout = BlockLayout::new(&[3, 3, 3]);
        let q = qt.lerp(&Blocks::uniform_full_power(&sc), 0.5);
        // large targets so every penalty term is active
        let lambda = [0.3, 0.0, 2.0];
        let rho = 10.0;
        let (_, g, h) = prob.augmented(&q.0, &lambda, rho, true).unwrap();
        let gv = layout.to_vector(&g);
        let scale = h.amax().max(1.0);
        let eps = 1e-6;
        for a in 0..layout.dim {
            let blk = a / herm_dim(3);
            let mut e = vec![0.0; 9];
            e[a % 9] = 1.0;
            let dir = coords_to_herm(&e, 3);
            let mut qp = q.clone();
            qp[blk] += &dir * cplx(eps);
            let mut qm = q.clone();
            qm[blk] -= &dir * cplx(eps);
            let (fp, gp, _) = prob.augmented(&qp.0, &lambda, rho, true).unwrap();
            let (fm, gm, _) = prob.augmented(&qm.0, &lambda, rho, true).unwrap();
            let fd = (fp - fm) / (2.0 * eps);
            assert!((fd - gv[a]).abs() < 1e-5 * (1.0 + fd.abs()), "grad {a}: {fd} vs {}", gv[a]);
            let hd = (layout.to_vector(&gp) - layout.to_vector(&gm)) / (2.0 * eps);
            for b in 0..layout.dim {
                assert!((hd[b] - h[(b, a)]).abs() < 1e-6 * scale, "hess ({b},{a}): {} vs {}", hd[b], h[(b, a)]);
            }
        }
    }
}
