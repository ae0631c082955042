//! Successive lower-bound maximization of the GEE.
//!
//! Each iteration maximizes a concave-over-linear global lower bound of the
//! GEE, obtained by linearizing the concave interference term `r_k⁻` at
//! `Q^t`, and moves to the maximizer without a line search.

use std::time::Instant;

use crate::algorithms::{BestResponse, IterationRecord, Solution};
use crate::error::{Error, Result};
use crate::linalg::{self, cplx, herm, re_inner, CMat};
use crate::model::{back_sandwich, grad_rate_minus, Blocks, Evaluation, Scenario};
use crate::scalar::Real;
use crate::solvers::barrier::SecondOrder;
use crate::solvers::{barrier_maximize, dinkelbach_from, BarrierOptions, BlockLayout};
use nalgebra::DMatrix;

#[derive(Debug, Clone, PartialEq)]
pub struct SlbmConfig<T> {
    pub eps_outer: T,
    pub eps_dinkelbach: T,
    /// Duality-gap target of the barrier solve of each parametric problem.
    pub gap_tol: T,
    pub max_outer: usize,
    pub max_dinkelbach: usize,
    pub max_newton: usize,
}

impl<T: Real> Default for SlbmConfig<T> {
    fn default() -> Self {
        SlbmConfig {
            eps_outer: T::lit(1e-4),
            eps_dinkelbach: T::lit(1e-8),
            gap_tol: T::lit(1e-10),
            max_outer: 1000,
            max_dinkelbach: 50,
            max_newton: 2000,
        }
    }
}

impl<T: Real> SlbmConfig<T> {
    pub fn validate(&self) -> Result<()> {
        if [self.eps_outer, self.eps_dinkelbach, self.gap_tol].iter().any(|&v| !(v > T::zero())) {
            return Err(Error::Config("SLBM tolerances must be positive".into()));
        }
        if self.max_outer == 0 || self.max_dinkelbach == 0 || self.max_newton == 0 {
            return Err(Error::Config("iteration caps must be positive".into()));
        }
        Ok(())
    }
}

/// Lower bound of the GEE built at `Q^t`.
pub struct SlbmSurrogate<'e, 'a, T: Real> {
    ev: &'e Evaluation<'a, T>,
    /// `H_kjᴴ (R_k^t)⁻¹ H_kj`, indexed `[k][j]`.
    g_minus: Vec<Vec<CMat<T>>>,
    /// `Σ_k r_k⁻(Q^t)`.
    r_minus: T,
    static_power: T,
    layout: BlockLayout,
}

impl<'e, 'a, T: Real> SlbmSurrogate<'e, 'a, T> {
    pub fn new(ev: &'e Evaluation<'a, T>) -> Result<Self> {
        let sc = ev.sc;
        if sc.has_rate_power() {
            return Err(Error::Unsupported("the lower-bound baseline needs a rate-independent power model".into()));
        }
        let kk = sc.num_links();
        let g_minus = (0..kk)
            .map(|k| {
                (0..kk)
                    .map(|j| if j == k { CMat::zeros(0, 0) } else { grad_rate_minus(sc, &ev.r_inv[k], k, j) })
                    .collect()
            })
            .collect();
        let r_minus = ev.logdet_r.iter().fold(T::zero(), |a, &v| a + v);
        let static_power = sc.links().iter().fold(T::zero(), |a, l| a + l.p0);
        let layout = BlockLayout::new(&sc.links().iter().map(|l| l.tx_antennas).collect::<Vec<_>>());
        Ok(SlbmSurrogate { ev, g_minus, r_minus, static_power, layout })
    }

    fn numerator_and_grad(&self, q: &Blocks<T>, with_grad: bool) -> Result<(T, Vec<CMat<T>>)> {
        let sc = self.ev.sc;
        let kk = sc.num_links();
        let mut value = -self.r_minus;
        let mut grad: Vec<CMat<T>> = if with_grad {
            (0..kk).map(|j| linalg::zeros(sc.link(j).tx_antennas, sc.link(j).tx_antennas)).collect()
        } else {
            Vec::new()
        };
        for k in 0..kk {
            let l = sc.link(k);
            let s = herm(&(sc.aux_cov(q, k) + linalg::scaled_eye(l.rx_antennas, l.sigma2)));
            value += linalg::logdet_hpd(&s)?;
            let inv = if with_grad { Some(linalg::inv_hpd(&s)?) } else { None };
            for j in 0..kk {
                if j != k {
                    value -= re_inner(&(&q[j] - &self.ev.q[j]), &self.g_minus[k][j]);
                }
                if let Some(inv) = &inv {
                    grad[j] += back_sandwich(sc.channel(k, j), inv);
                    if j != k {
                        grad[j] -= &self.g_minus[k][j];
                    }
                }
            }
        }
        Ok((value, grad.into_iter().map(|g| herm(&g)).collect()))
    }

    pub fn numerator(&self, q: &Blocks<T>) -> T {
        self.numerator_and_grad(q, false).map(|v| v.0).unwrap_or_else(|_| T::lit(f64::NAN))
    }

    pub fn denominator(&self, q: &Blocks<T>) -> T {
        self.ev.sc.links().iter().zip(q.iter()).fold(self.static_power, |a, (l, qk)| a + l.rho * linalg::trace_re(qk))
    }

    pub fn value(&self, q: &Blocks<T>) -> T {
        self.numerator(q) / self.denominator(q)
    }

    pub fn gradient(&self, q: &Blocks<T>) -> Result<Blocks<T>> {
        let (num, gn) = self.numerator_and_grad(q, true)?;
        let den = self.denominator(q);
        let sc = self.ev.sc;
        Ok(Blocks(
            gn.into_iter()
                .enumerate()
                .map(|(j, g)| {
                    let dd = linalg::scaled_eye(sc.link(j).tx_antennas, sc.link(j).rho);
                    herm(&(g * cplx(T::one() / den) - dd * cplx(num / (den * den))))
                })
                .collect(),
        ))
    }

    /// `numerator − s·denominator` with gradient and Hessian.
    fn parametric(&self, x: &[CMat<T>], s: T, derivs: bool) -> Result<SecondOrder<T>> {
        let sc = self.ev.sc;
        let q = Blocks(x.to_vec());
        let (num, grad) = self.numerator_and_grad(&q, derivs)?;
        let value = num - s * self.denominator(&q);
        if !derivs {
            return Ok((value, Vec::new(), DMatrix::zeros(0, 0)));
        }
        let kk = sc.num_links();
        let mut hess = DMatrix::zeros(self.layout.dim, self.layout.dim);
        for k in 0..kk {
            let l = sc.link(k);
            let inv = linalg::inv_hpd(&herm(&(sc.aux_cov(&q, k) + linalg::scaled_eye(l.rx_antennas, l.sigma2))))?;
            for j in 0..kk {
                for m in j..kk {
                    let x = sc.channel(k, j).adjoint() * &inv * sc.channel(k, m);
                    self.layout.add_quad_form(&mut hess, j, m, &x, -T::one());
                }
            }
        }
        let grad = grad.into_iter().enumerate().map(|(j, g)| g - linalg::scaled_eye(sc.link(j).tx_antennas, s * sc.link(j).rho)).collect();
        Ok((value, grad, hess))
    }

    /// Dinkelbach over the bound; each parametric problem is solved by the
    /// barrier method started between the previous maximizer and the scaled identity.
    pub fn maximize(&self, cfg: &SlbmConfig<T>) -> Result<BestResponse<T>> {
        let sc = self.ev.sc;
        let budgets: Vec<T> = sc.links().iter().map(|l| l.p_max).collect();
        let opts = BarrierOptions { gap_tol: cfg.gap_tol, max_newton: cfg.max_newton, ..BarrierOptions::default() };
        let mut warm = self.ev.q.0.clone();
        let out = dinkelbach_from(
            self.value(&self.ev.q),
            |x: &Blocks<T>| self.numerator(x),
            |x: &Blocks<T>| self.denominator(x),
            |s| {
                let x0 = warm
                    .iter()
                    .zip(sc.links())
                    .map(|(b, l)| b * cplx(T::lit(0.5)) + linalg::scaled_eye(l.tx_antennas, T::lit(0.25) * l.p_max / T::from_usize(l.tx_antennas).unwrap()))
                    .collect();
                let out = barrier_maximize(|x, d| self.parametric(x, s, d), &budgets, x0, &opts)?;
                warm = out.x.clone();
                Ok(Blocks(out.x))
            },
            cfg.eps_dinkelbach,
            cfg.max_dinkelbach,
        )?;
        Ok(BestResponse { bq: out.x, by: None, s_star: out.s, dinkelbach_iters: out.iters, dual_iters: None, lambda: None })
    }
}

/// Value and gradient of the bound built at `q_t`, evaluated at `q`.
pub fn slbm_surrogate<T: Real>(sc: &Scenario<T>, q: &Blocks<T>, q_t: &Blocks<T>) -> Result<(T, Blocks<T>)> {
    let ev = Evaluation::new(sc, q_t.clone())?;
    let sur = SlbmSurrogate::new(&ev)?;
    Ok((sur.value(q), sur.gradient(q)?))
}

/// Iterates `Q^{t+1} = argmax` of the bound at `Q^t` until `‖Q^{t+1} − Q^t‖_F ≤ eps_outer`.
///
/// An inexact inner solve that would lower the GEE ends the run at `Q^t`.
pub fn solve_slbm<T: Real>(sc: &Scenario<T>, cfg: &SlbmConfig<T>, q0: &Blocks<T>) -> Result<Solution<T>> {
    cfg.validate()?;
    if sc.has_rate_power() {
        return Err(Error::Unsupported("the lower-bound baseline needs a rate-independent power model".into()));
    }
    q0.check_power_feasible(sc, T::lit(1e-10))?;
    let start = Instant::now();
    let mut q = q0.clone();
    let mut trace = Vec::new();
    for t in 0..cfg.max_outer {
        let wrap = |trace: &Vec<IterationRecord>, e: Error| Error::AtIteration { t, trace: trace.clone(), source: Box::new(e) };
        let ev = Evaluation::new(sc, q.clone()).map_err(|e| wrap(&trace, e))?;
        let f0 = ev.gee();
        let br = SlbmSurrogate::new(&ev).and_then(|s| s.maximize(cfg)).map_err(|e| wrap(&trace, e))?;
        let residual = q.dist(&br.bq);
        let mut rec = crate::algorithms::record(&ev, t, f0, residual, &br, start);
        let next = Evaluation::new(sc, br.bq.clone()).map_err(|e| wrap(&trace, e))?;
        if residual <= cfg.eps_outer || next.gee() < f0 {
            trace.push(rec);
            return Ok(Solution { q, y: None, objective: f0, trace, last: br });
        }
        rec.gamma = 1.0;
        trace.push(rec);
        q = br.bq;
    }
    Err(Error::OuterCap { iters: cfg.max_outer, trace })
}
