//! Projected-gradient ascent for concave objectives over products of PSD blocks.

use crate::error::{Error, Result};
use crate::linalg::{self, CMat};
use crate::scalar::Real;

/// Feasible set of one block.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BlockSet<T> {
    Psd,
    /// `{X ⪰ 0, tr X ≤ budget}`.
    PsdTrace(T),
}

#[derive(Debug, Clone, Copy)]
pub struct PgOptions<T> {
    /// Stop when `‖P(X + ∇f) − X‖_F ≤ tol`.
    pub tol: T,
    pub max_iter: usize,
    pub alpha: T,
    pub beta: T,
}

impl<T: Real> Default for PgOptions<T> {
    fn default() -> Self {
        PgOptions { tol: T::lit(1e-9), max_iter: 20_000, alpha: T::lit(1e-4), beta: T::lit(0.5) }
    }
}

#[derive(Debug, Clone)]
pub struct PgOutcome<T: Real> {
    pub x: Vec<CMat<T>>,
    pub value: T,
    pub iters: usize,
    pub pg_norm: T,
}

/// Euclidean projection of `y` onto `{y ≥ 0, Σ y ≤ cap}`.
pub fn project_capped_simplex<T: Real>(y: &[T], cap: T) -> Vec<T> {
    let clipped: Vec<T> = y.iter().map(|&v| v.max(T::zero())).collect();
    let total = clipped.iter().fold(T::zero(), |a, &b| a + b);
    if total <= cap {
        return clipped;
    }
    let mut u = clipped.clone();
    u.sort_by(|a, b| b.partial_cmp(a).unwrap_or(std::cmp::Ordering::Equal));
    let mut cum = T::zero();
    let mut theta = T::zero();
    for (i, &ui) in u.iter().enumerate() {
        cum += ui;
        let t = (cum - cap) / T::from_usize(i + 1).unwrap();
        if ui - t > T::zero() {
            theta = t;
        }
    }
    clipped.into_iter().map(|v| (v - theta).max(T::zero())).collect()
}

pub fn project_block<T: Real>(x: &CMat<T>, set: BlockSet<T>) -> CMat<T> {
    match set {
        BlockSet::Psd => linalg::psd_project(x),
        BlockSet::PsdTrace(p) => {
            let (d, u) = linalg::eigh(x);
            linalg::from_eig(&project_capped_simplex(&d, p), &u)
        }
    }
}

fn project_all<T: Real>(x: &[CMat<T>], sets: &[BlockSet<T>]) -> Vec<CMat<T>> {
    x.iter().zip(sets).map(|(b, &s)| project_block(b, s)).collect()
}

fn dot<T: Real>(a: &[CMat<T>], b: &[CMat<T>]) -> T {
    a.iter().zip(b).fold(T::zero(), |acc, (x, y)| acc + linalg::re_inner(x, y))
}

fn axpy<T: Real>(x: &[CMat<T>], a: T, d: &[CMat<T>]) -> Vec<CMat<T>> {
    x.iter().zip(d).map(|(xi, di)| xi + di * linalg::cplx(a)).collect()
}

fn diff<T: Real>(a: &[CMat<T>], b: &[CMat<T>]) -> Vec<CMat<T>> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

/// Maximizes a concave differentiable `f` over the product of `sets`.
///
/// `f` returns the value and the gradient (`df = inner(G, dX)`), or an error
/// when evaluated outside its domain. Trial steps start from the
/// Barzilai-Borwein length and backtrack along the projection arc until the
/// Armijo condition holds.
pub fn projected_gradient_concave<T: Real>(
    mut f: impl FnMut(&[CMat<T>]) -> Result<(T, Vec<CMat<T>>)>,
    sets: &[BlockSet<T>],
    x0: Vec<CMat<T>>,
    opts: &PgOptions<T>,
) -> Result<PgOutcome<T>> {
    if sets.len() != x0.len() {
        return Err(Error::Shape(format!("{} sets for {} blocks", sets.len(), x0.len())));
    }
    let mut x = project_all(&x0, sets);
    let (mut fx, mut g) = f(&x)?;
    let mut step = T::one();
    let max_step = T::lit(1e12);
    let min_step = T::lit(1e-14);
    for it in 0..opts.max_iter {
        let unit = diff(&project_all(&axpy(&x, T::one(), &g), sets), &x);
        let pg_norm = dot(&unit, &unit).sqrt();
        if pg_norm <= opts.tol {
            return Ok(PgOutcome { x, value: fx, iters: it, pg_norm });
        }
        let mut t = step;
        let mut accepted = None;
        for _ in 0..80 {
            let trial = project_all(&axpy(&x, t, &g), sets);
            let d = diff(&trial, &x);
            let gd = dot(&g, &d);
            if let Ok((ft, gt)) = f(&trial) {
                // concavity gives f(trial) − f(x) ≥ inner(∇f(trial), d), which
                // stays informative once value differences drown in round-off
                if ft >= fx + opts.alpha * gd || dot(&gt, &d) >= opts.alpha * gd {
                    accepted = Some((trial, d, ft, gt));
                    break;
                }
            }
            t *= opts.beta;
            if t < min_step {
                break;
            }
        }
        let Some((xn, s, fnew, gn)) = accepted else {
            // no progress possible at working precision
            return Ok(PgOutcome { x, value: fx, iters: it, pg_norm });
        };
        let yv = diff(&gn, &g);
        let sy = dot(&s, &yv);
        let ss = dot(&s, &s);
        step = if sy < T::zero() { (ss / -sy).clamp(min_step, max_step) } else { (t * T::lit(2.0)).min(max_step) };
        x = xn;
        fx = fnew;
        g = gn;
    }
    Err(Error::convergence("projected gradient", opts.max_iter))
}
