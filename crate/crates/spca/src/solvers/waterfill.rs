//! Generalized waterfilling over `{Q ⪰ 0, tr Q ≤ P}`.

use crate::error::{Error, Result};
use crate::linalg::{self, cplx, herm, CMat};
use crate::scalar::Real;

/// Maximize `log det(I + A Q) − inner(D, Q)` subject to `Q ⪰ 0`, `tr Q ≤ p`.
#[derive(Debug, Clone)]
pub struct WaterfillProblem<T: Real> {
    /// Signal curvature, PSD.
    pub a: CMat<T>,
    /// Linear cost, Hermitian (possibly indefinite).
    pub d: CMat<T>,
    pub p: T,
}

impl<T: Real> WaterfillProblem<T> {
    pub fn new(a: CMat<T>, d: CMat<T>, p: T) -> Result<Self> {
        if a.shape() != d.shape() || !a.is_square() {
            return Err(Error::Shape(format!("waterfill A {:?} vs D {:?}", a.shape(), d.shape())));
        }
        if !(p > T::zero()) {
            return Err(Error::Config("waterfill budget must be positive".into()));
        }
        Ok(WaterfillProblem { a: herm(&a), d: herm(&d), p })
    }

    pub fn objective(&self, q: &CMat<T>) -> Result<T> {
        let (ah, _) = sqrt_psd(&self.a);
        let n = self.a.nrows();
        let m = herm(&(linalg::eye(n) + &ah * q * &ah));
        Ok(linalg::logdet_hpd(&m)? - linalg::re_inner(&self.d, q))
    }

    pub fn gradient(&self, q: &CMat<T>) -> Result<CMat<T>> {
        let (ah, _) = sqrt_psd(&self.a);
        let n = self.a.nrows();
        let m = herm(&(linalg::eye(n) + &ah * q * &ah));
        let inv = linalg::inv_hpd(&m)?;
        Ok(herm(&(&ah * inv * &ah - &self.d)))
    }
}

fn sqrt_psd<T: Real>(a: &CMat<T>) -> (CMat<T>, T) {
    let (d, u) = linalg::eigh(a);
    let top = d.last().copied().unwrap_or_else(T::zero);
    let s: Vec<T> = d.into_iter().map(|v| v.max(T::zero()).sqrt()).collect();
    (linalg::from_eig(&s, &u), top)
}

/// Finds the trace multiplier of a monotone allocation by bracket doubling and bisection.
///
/// Returns 0 when `trace(0) ≤ p`; otherwise a `μ` with `|trace(μ) − p| ≤ tol·p`.
pub fn bisect_multiplier<T: Real>(trace: impl FnMut(T) -> T, p: T, tol: T) -> Result<T> {
    bisect_multiplier_from(trace, T::zero(), p, tol)
}

/// [`bisect_multiplier`] with the search restricted to `μ ≥ lo`.
pub fn bisect_multiplier_from<T: Real>(mut trace: impl FnMut(T) -> T, lo: T, p: T, tol: T) -> Result<T> {
    if trace(lo) <= p {
        return Ok(lo);
    }
    let mut lo = lo;
    let mut hi = (lo * T::lit(2.0)).max(T::one());
    let mut doublings = 0;
    while trace(hi) > p {
        lo = hi;
        hi *= T::lit(2.0);
        doublings += 1;
        if doublings > 2000 {
            return Err(Error::Contract("trace does not decay as the multiplier grows".into()));
        }
    }
    for _ in 0..200 {
        let t_hi = trace(hi);
        if (t_hi - p).abs() <= tol * p {
            return Ok(hi);
        }
        let mid = (lo + hi) * T::lit(0.5);
        let t = trace(mid);
        if (t - p).abs() <= tol * p {
            return Ok(mid);
        }
        if t > p {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Err(Error::convergence("multiplier bisection", 200))
}

/// Eigen-coordinates of `D` reused for every trial multiplier.
struct Whitening<T: Real> {
    d: Vec<T>,
    w: CMat<T>,
}

impl<T: Real> Whitening<T> {
    /// `Q(μ) = V [I − Σ⁻¹]⁺ Vᴴ` with `(V, Σ)` the generalized eigenpairs of `(A, D + μI)`.
    fn solve(&self, a: &CMat<T>, mu: T) -> CMat<T> {
        let inv_sqrt: Vec<T> = self.d.iter().map(|&v| T::one() / (v + mu).sqrt()).collect();
        let b = linalg::from_eig(&inv_sqrt, &self.w);
        let a_w = herm(&(&b * a * &b));
        let (sig, u) = linalg::eigh(&a_w);
        let v = &b * u;
        let levels: Vec<T> = sig.iter().map(|&s| if s > T::one() { T::one() - T::one() / s } else { T::zero() }).collect();
        linalg::from_eig(&levels, &v)
    }
}

/// Closed-form maximizer and trace multiplier `(Q*, μ*)`.
///
/// When `D` has nonpositive eigenvalues the multiplier is searched above
/// `−λ_min(D)`. Directions with zero signal curvature receive no power,
/// except that leftover budget is placed on the most negative direction of
/// `D` when the objective grows linearly along it.
pub fn waterfill<T: Real>(prob: &WaterfillProblem<T>, trace_tol: T) -> Result<(CMat<T>, T)> {
    let n = prob.a.nrows();
    let p = prob.p;
    let (d, w) = linalg::eigh(&prob.d);
    let lmin = d[0];
    let dmax = d.iter().fold(T::zero(), |acc, v| acc.max(v.abs()));
    let a_norm = linalg::herm_norm2(&prob.a);
    if a_norm <= T::default_epsilon() * dmax.max(T::one()) {
        if d[n - 1] <= T::zero() {
            return Err(Error::Degenerate("zero signal curvature with nonpositive cost".into()));
        }
        if lmin >= T::zero() {
            return Ok((linalg::zeros(n, n), T::zero()));
        }
    }
    let wh = Whitening { d, w };
    let scale = dmax.max(T::one());
    let lo = (T::lit(1e-10) * scale - lmin).max(T::zero());
    let q_lo = wh.solve(&prob.a, lo);
    let t_lo = linalg::trace_re(&q_lo);
    if t_lo <= p {
        if lo == T::zero() {
            return Ok((q_lo, T::zero()));
        }
        if lmin < T::zero() {
            // linear growth along the most negative direction of D fills the budget
            let u = wh.w.column(0).into_owned();
            let extra = &u * u.adjoint() * cplx(p - t_lo);
            return Ok((herm(&(q_lo + extra)), -lmin));
        }
        return Ok((q_lo, lo));
    }
    let trace = |mu: T| linalg::trace_re(&wh.solve(&prob.a, mu));
    let mut lo = lo;
    let mut hi = (lo * T::lit(2.0)).max(T::one());
    let mut doublings = 0;
    while trace(hi) > p {
        lo = hi;
        hi *= T::lit(2.0);
        doublings += 1;
        if doublings > 2000 {
            return Err(Error::Contract("waterfill trace does not decay".into()));
        }
    }
    let eps = T::default_epsilon();
    for _ in 0..200 {
        let q_hi = wh.solve(&prob.a, hi);
        let gap = p - linalg::trace_re(&q_hi);
        if gap <= trace_tol * p / hi.max(T::one()) || hi - lo <= T::lit(4.0) * eps * hi {
            return Ok((q_hi, hi));
        }
        let mid = (lo + hi) * T::lit(0.5);
        if trace(mid) > p {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Err(Error::convergence("waterfill bisection", 200))
}
