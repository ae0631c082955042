use crate::error::{Error, Result};
use crate::scalar::Real;

#[derive(Debug, Clone)]
pub struct DinkelbachOutcome<X, T> {
    pub x: X,
    pub s: T,
    /// Parameter values `s^0 = 0, s^1, …`, nondecreasing.
    pub history: Vec<T>,
    /// Number of parametric solves.
    pub iters: usize,
}

/// Maximizes `numerator / denominator` given an exact solver of
/// `max numerator − s·denominator` for fixed `s`.
///
/// Starts from `s = 0` and sets `s ← N(X(s))/D(X(s))` until `|Δs| < eps`.
/// With an exact parametric solver `s` never decreases; if an inexact one
/// lowers it, the previous point is returned.
pub fn dinkelbach<X, T: Real>(
    numerator: impl Fn(&X) -> T,
    denominator: impl Fn(&X) -> T,
    param_solver: impl FnMut(T) -> Result<X>,
    eps: T,
    max_iter: usize,
) -> Result<DinkelbachOutcome<X, T>> {
    dinkelbach_from(T::zero(), numerator, denominator, param_solver, eps, max_iter)
}

/// [`dinkelbach`] started at `s0`, which should not exceed the optimal
/// ratio (e.g. the ratio at a known feasible point).
pub fn dinkelbach_from<X, T: Real>(
    s0: T,
    numerator: impl Fn(&X) -> T,
    denominator: impl Fn(&X) -> T,
    mut param_solver: impl FnMut(T) -> Result<X>,
    eps: T,
    max_iter: usize,
) -> Result<DinkelbachOutcome<X, T>> {
    let mut s = s0;
    let mut history = vec![s];
    let mut best: Option<X> = None;
    for it in 1..=max_iter {
        let x = param_solver(s)?;
        let den = denominator(&x);
        if !(den > T::zero()) {
            return Err(Error::Contract("Dinkelbach denominator must stay positive".into()));
        }
        let s_new = numerator(&x) / den;
        if !s_new.is_finite() {
            return Err(Error::Contract("Dinkelbach ratio is not finite".into()));
        }
        if best.is_some() && s_new < s {
            let x = best.take().expect("checked");
            return Ok(DinkelbachOutcome { x, s, history, iters: it });
        }
        if (s_new - s).abs() < eps {
            history.push(s_new);
            return Ok(DinkelbachOutcome { x, s: s_new, history, iters: it });
        }
        s = s_new;
        history.push(s);
        best = Some(x);
    }
    Err(Error::Convergence {
        what: "Dinkelbach",
        iters: max_iter,
        history: history.iter().map(|v| v.as_f64()).collect(),
    })
}
