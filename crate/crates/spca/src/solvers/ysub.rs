use crate::error::{Error, Result};
use crate::linalg::{self, CMat};
use crate::scalar::Real;

/// Maximizer of `λ·log det(σ²I + Y) − inner(Σ, Y) − c‖Y − Y_t‖²` over `Y ⪰ 0`.
///
/// The maximizer shares eigenvectors with `A = 2c·Y_t − Σ`; each eigenvalue
/// `a` maps to the positive root of `2c·y² + (2cσ² − a)·y − (aσ² + λ) = 0`,
/// or to 0 when `aσ² + λ ≤ 0`.
pub fn y_subproblem<T: Real>(lambda: T, sigma: &CMat<T>, y_t: &CMat<T>, c: T, sigma2: T) -> Result<CMat<T>> {
    if !(c > T::zero()) {
        return Err(Error::Contract("y_subproblem needs c > 0".into()));
    }
    if !(lambda >= T::zero()) {
        return Err(Error::Contract("y_subproblem needs lambda >= 0".into()));
    }
    if sigma.shape() != y_t.shape() {
        return Err(Error::Shape(format!("Sigma {:?} vs Y_t {:?}", sigma.shape(), y_t.shape())));
    }
    let two_c = c * T::lit(2.0);
    let a = y_t * linalg::cplx(two_c) - sigma;
    Ok(linalg::eig_map(&a, |ai| {
        let cc = ai * sigma2 + lambda;
        if cc <= T::zero() {
            return T::zero();
        }
        let b = two_c * sigma2 - ai;
        let disc = (b * b + T::lit(8.0) * c * cc).sqrt();
        // stable form of (−b + disc) / 4c
        if b > T::zero() {
            T::lit(2.0) * cc / (b + disc)
        } else {
            (disc - b) / (T::lit(4.0) * c)
        }
    }))
}

/// Objective maximized by [`y_subproblem`].
pub fn y_objective<T: Real>(lambda: T, sigma: &CMat<T>, y_t: &CMat<T>, c: T, sigma2: T, y: &CMat<T>) -> Result<T> {
    let n = y.nrows();
    let ld = linalg::logdet_hpd(&(y + linalg::scaled_eye(n, sigma2)))?;
    Ok(lambda * ld - linalg::re_inner(sigma, y) - c * linalg::fro_norm2(&(y - y_t)))
}

/// Gradient of [`y_objective`].
pub fn y_gradient<T: Real>(lambda: T, sigma: &CMat<T>, y_t: &CMat<T>, c: T, sigma2: T, y: &CMat<T>) -> Result<CMat<T>> {
    let n = y.nrows();
    let inv = linalg::inv_hpd(&(y + linalg::scaled_eye(n, sigma2)))?;
    Ok(linalg::herm(&(inv * linalg::cplx(lambda) - sigma - (y - y_t) * linalg::cplx(c * T::lit(2.0)))))
}
