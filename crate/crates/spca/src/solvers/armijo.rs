use crate::error::{Error, Result};
use crate::scalar::Real;

pub const MAX_BACKTRACKS: u32 = 60;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ArmijoStep<T> {
    pub gamma: T,
    pub value: T,
    pub backtracks: u32,
}

/// Successive line search: the largest `γ = β^m` with
/// `f(γ) ≥ f0 + α·γ·slope`, where `f(γ)` evaluates the objective at
/// `X_t + γ·d` and `slope = inner(∇f(X_t), d)`.
pub fn armijo_linesearch<T: Real>(
    mut f: impl FnMut(T) -> Result<T>,
    f0: T,
    slope: T,
    alpha: T,
    beta: T,
) -> Result<ArmijoStep<T>> {
    if !(slope > T::zero()) {
        return Err(Error::Contract(format!("line search needs an ascent direction, slope = {}", slope.as_f64())));
    }
    if !(alpha > T::zero() && alpha < T::one() && beta > T::zero() && beta < T::one()) {
        return Err(Error::Config("line search needs 0 < alpha, beta < 1".into()));
    }
    let mut gamma = T::one();
    for m in 0..=MAX_BACKTRACKS {
        let v = f(gamma)?;
        if v >= f0 + alpha * gamma * slope {
            return Ok(ArmijoStep { gamma, value: v, backtracks: m });
        }
        gamma *= beta;
    }
    Err(Error::convergence("Armijo line search", MAX_BACKTRACKS as usize))
}
