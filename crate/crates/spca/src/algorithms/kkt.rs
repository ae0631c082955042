//! Stationarity and KKT diagnostics.

use crate::error::{Error, Result};
use crate::linalg::{self, cplx, herm, re_inner, CMat};
use crate::model::{back_sandwich, grad_rate_minus, rate_plus, Blocks, Evaluation, Objective, Scenario};
use crate::scalar::Real;

/// `‖BQ − Q‖_F` over the stacked blocks.
pub fn stationarity_residual<T: Real>(q: &Blocks<T>, bq: &Blocks<T>) -> T {
    q.dist(bq)
}

/// Multipliers of the reformulated problem with auxiliary `Y_k`.
///
/// Lagrangian: `f(Q) + Σ inner(Π_k, Q_k) − Σ μ_k (tr Q_k − P_k)
/// + Σ λ_k (r_k⁺(Y_k) − r_k⁻(Q) − R_k) + Σ inner(Σ_k, Y_k(Q) − Y_k)`.
#[derive(Debug, Clone)]
pub struct KktDuals<T: Real> {
    pub lambda: Vec<T>,
    pub sigma: Vec<CMat<T>>,
    pub pi: Vec<CMat<T>>,
    pub mu: Vec<T>,
}

/// Largest violation among stationarity, complementarity, feasibility and
/// dual-sign conditions.
pub fn kkt_residual<T: Real>(
    sc: &Scenario<T>,
    objective: Objective,
    q: &Blocks<T>,
    y: &Blocks<T>,
    duals: &KktDuals<T>,
) -> Result<T> {
    let kk = sc.num_links();
    if q.len() != kk || y.len() != kk || duals.lambda.len() != kk || duals.sigma.len() != kk || duals.pi.len() != kk || duals.mu.len() != kk {
        return Err(Error::Shape("KKT blocks must have one entry per link".into()));
    }
    let ev = Evaluation::new(sc, q.clone())?;
    let grad = objective.gradient(&ev);
    let mut res = T::zero();
    let mut bump = |v: T| {
        if v > res || v != v {
            res = v;
        }
    };
    let mut r_minus = Vec::with_capacity(kk);
    for k in 0..kk {
        r_minus.push(linalg::logdet_hpd(&ev.r_cov[k])?);
    }
    for j in 0..kk {
        let l = sc.link(j);
        let mut g = &grad[j] + &duals.pi[j] - linalg::scaled_eye(l.tx_antennas, duals.mu[j]);
        for k in 0..kk {
            g += back_sandwich(sc.channel(k, j), &duals.sigma[k]);
            if k != j && duals.lambda[k] != T::zero() {
                g -= grad_rate_minus(sc, &ev.r_inv[k], k, j) * cplx(duals.lambda[k]);
            }
        }
        bump(linalg::fro_norm2(&g).sqrt());
        bump(re_inner(&duals.pi[j], &q[j]).abs());
        let tr = linalg::trace_re(&q[j]);
        bump((duals.mu[j] * (tr - l.p_max)).abs());
        bump((-linalg::lambda_min(&duals.pi[j])).max(T::zero()));
        bump((-duals.mu[j]).max(T::zero()));
        bump((tr - l.p_max).max(T::zero()));
        bump((-linalg::lambda_min(&q[j])).max(T::zero()));
    }
    for k in 0..kk {
        let l = sc.link(k);
        let n = l.rx_antennas;
        let slack = rate_plus(sc, &y[k], k)? - r_minus[k] - l.r_min;
        bump((duals.lambda[k] * slack).abs());
        bump((-slack).max(T::zero()));
        bump((-duals.lambda[k]).max(T::zero()));
        let inv = linalg::inv_hpd(&(&y[k] + linalg::scaled_eye(n, l.sigma2)))?;
        bump(linalg::fro_norm2(&(inv * cplx(duals.lambda[k]) - &duals.sigma[k])).sqrt());
        bump(linalg::fro_norm2(&(&y[k] - sc.aux_cov(q, k))).sqrt());
    }
    Ok(res)
}

/// Completes `λ` to a full multiplier set at `q`.
///
/// `Σ_k = λ_k (σ_k² I + Y_k)⁻¹` makes the `Y`-stationarity exact; `μ_j` and
/// `Π_j` absorb the remaining gradient `G_j = ∇_j f + Σ_k λ_k ∇_j r_k`, with
/// `μ_j = inner(G_j, Q_j)/tr Q_j` when the budget is active and 0 otherwise.
pub fn recover_duals<T: Real>(sc: &Scenario<T>, objective: Objective, q: &Blocks<T>, lambda: &[T]) -> Result<(Blocks<T>, KktDuals<T>)> {
    let kk = sc.num_links();
    if lambda.len() != kk {
        return Err(Error::Shape(format!("{} multipliers for {kk} links", lambda.len())));
    }
    let ev = Evaluation::new(sc, q.clone())?;
    let y = sc.aux_covs(q);
    let grad = objective.gradient(&ev);
    let mut sigma = Vec::with_capacity(kk);
    for k in 0..kk {
        let l = sc.link(k);
        let inv = linalg::inv_hpd(&(&y[k] + linalg::scaled_eye(l.rx_antennas, l.sigma2)))?;
        sigma.push(inv * cplx(lambda[k]));
    }
    let mut pi = Vec::with_capacity(kk);
    let mut mu = Vec::with_capacity(kk);
    for j in 0..kk {
        let mut g = grad[j].clone();
        for k in 0..kk {
            if lambda[k] != T::zero() {
                g += ev.grad_rate(j, k) * cplx(lambda[k]);
            }
        }
        let l = sc.link(j);
        let tr = linalg::trace_re(&q[j]);
        let m = if tr >= l.p_max * (T::one() - T::lit(1e-6)) && tr > T::zero() {
            (re_inner(&g, &q[j]) / tr).max(T::zero())
        } else {
            T::zero()
        };
        pi.push(herm(&(linalg::scaled_eye(l.tx_antennas, m) - g)));
        mu.push(m);
    }
    Ok((y, KktDuals { lambda: lambda.to_vec(), sigma, pi, mu }))
}
