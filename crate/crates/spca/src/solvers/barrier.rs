//! Log-barrier Newton method for smooth concave objectives over products of
//! `{X ⪰ 0, tr X ≤ P}` blocks.
//!
//! Hermitian blocks are handled in orthonormal real coordinates: the diagonal,
//! then `√2 Re X_ij` and `√2 Im X_ij` for `i < j`.

use nalgebra::{Cholesky, Complex, DMatrix, DVector};

use crate::error::{Error, Result};
use crate::linalg::{self, CMat};
use crate::scalar::Real;

/// Number of real coordinates of an `n×n` Hermitian matrix.
pub fn herm_dim(n: usize) -> usize {
    n * n
}

pub fn herm_to_coords<T: Real>(m: &CMat<T>, out: &mut [T]) {
    let n = m.nrows();
    let r2 = T::lit(std::f64::consts::SQRT_2);
    let mut p = 0;
    for i in 0..n {
        out[p] = m[(i, i)].re;
        p += 1;
    }
    for i in 0..n {
        for j in i + 1..n {
            // average the two triangles so a slightly non-Hermitian input is projected
            let z = (m[(i, j)] + m[(j, i)].conj()) * T::lit(0.5);
            out[p] = r2 * z.re;
            out[p + 1] = r2 * z.im;
            p += 2;
        }
    }
}

pub fn coords_to_herm<T: Real>(v: &[T], n: usize) -> CMat<T> {
    let mut m = linalg::zeros(n, n);
    let s = T::one() / T::lit(std::f64::consts::SQRT_2);
    let mut p = 0;
    for i in 0..n {
        m[(i, i)] = linalg::cplx(v[p]);
        p += 1;
    }
    for i in 0..n {
        for j in i + 1..n {
            let z = Complex::new(v[p] * s, v[p + 1] * s);
            m[(i, j)] = z;
            m[(j, i)] = z.conj();
            p += 2;
        }
    }
    m
}

/// Layout of stacked blocks in real coordinates.
#[derive(Debug, Clone)]
pub struct BlockLayout {
    pub sizes: Vec<usize>,
    pub offsets: Vec<usize>,
    pub dim: usize,
}

impl BlockLayout {
    pub fn new(sizes: &[usize]) -> Self {
        let mut offsets = Vec::with_capacity(sizes.len());
        let mut dim = 0;
        for &n in sizes {
            offsets.push(dim);
            dim += herm_dim(n);
        }
        BlockLayout { sizes: sizes.to_vec(), offsets, dim }
    }

    pub fn to_vector<T: Real>(&self, blocks: &[CMat<T>]) -> DVector<T> {
        let mut v = DVector::zeros(self.dim);
        for (b, m) in blocks.iter().enumerate() {
            let o = self.offsets[b];
            herm_to_coords(m, &mut v.as_mut_slice()[o..o + herm_dim(self.sizes[b])]);
        }
        v
    }

    pub fn to_blocks<T: Real>(&self, v: &DVector<T>) -> Vec<CMat<T>> {
        (0..self.sizes.len())
            .map(|b| {
                let o = self.offsets[b];
                coords_to_herm(&v.as_slice()[o..o + herm_dim(self.sizes[b])], self.sizes[b])
            })
            .collect()
    }

    /// Adds `coef · Re tr(E_a X E_b Xᴴ)` for `a` in block `j`, `b` in block `l`
    /// (and the mirrored block when `j ≠ l`). `X` is `n_j × n_l`.
    pub fn add_quad_form<T: Real>(&self, hess: &mut DMatrix<T>, j: usize, l: usize, x: &CMat<T>, coef: T) {
        let (nj, nl) = (self.sizes[j], self.sizes[l]);
        let (oj, ol) = (self.offsets[j], self.offsets[l]);
        let r2 = T::lit(std::f64::consts::SQRT_2);
        let inv_r2 = T::one() / r2;
        let i_unit = Complex::new(T::zero(), T::one());
        // E_b as (r, s, kind): 0 diagonal, 1 symmetric, 2 antisymmetric
        let mut basis = Vec::with_capacity(herm_dim(nl));
        for r in 0..nl {
            basis.push((r, r, 0u8));
        }
        for r in 0..nl {
            for s in r + 1..nl {
                basis.push((r, s, 1));
                basis.push((r, s, 2));
            }
        }
        for (b, &(r, s, kind)) in basis.iter().enumerate() {
            // entry (p, q) of Z = X E_b Xᴴ
            let z = |p: usize, q: usize| -> Complex<T> {
                match kind {
                    0 => x[(p, r)] * x[(q, r)].conj(),
                    1 => (x[(p, r)] * x[(q, s)].conj() + x[(p, s)] * x[(q, r)].conj()) * inv_r2,
                    _ => (x[(p, r)] * x[(q, s)].conj() - x[(p, s)] * x[(q, r)].conj()) * i_unit * inv_r2,
                }
            };
            let mut put = |a: usize, v: T| {
                hess[(oj + a, ol + b)] += coef * v;
                if j != l {
                    hess[(ol + b, oj + a)] += coef * v;
                }
            };
            let mut a = 0;
            for p in 0..nj {
                put(a, z(p, p).re);
                a += 1;
            }
            for p in 0..nj {
                for q in p + 1..nj {
                    let v = z(p, q);
                    put(a, r2 * v.re);
                    put(a + 1, r2 * v.im);
                    a += 2;
                }
            }
        }
    }
}

/// Value, gradient blocks and Hessian in the coordinates of a [`BlockLayout`].
pub type SecondOrder<T> = (T, Vec<CMat<T>>, DMatrix<T>);

#[derive(Debug, Clone, Copy)]
pub struct BarrierOptions<T> {
    /// Stop once the barrier duality-gap bound `m/t` is below this.
    pub gap_tol: T,
    pub t0: T,
    pub growth: T,
    /// Centering stop on half the squared Newton decrement, in units of `f`.
    pub newton_tol: T,
    pub max_newton: usize,
}

impl<T: Real> Default for BarrierOptions<T> {
    fn default() -> Self {
        BarrierOptions { gap_tol: T::lit(1e-10), t0: T::one(), growth: T::lit(100.0), newton_tol: T::lit(1e-12), max_newton: 2000 }
    }
}

#[derive(Debug, Clone)]
pub struct BarrierOutcome<T: Real> {
    pub x: Vec<CMat<T>>,
    pub value: T,
    pub newton_iters: usize,
}

struct Barrier<'b, T: Real> {
    layout: &'b BlockLayout,
    budgets: &'b [T],
}

impl<T: Real> Barrier<'_, T> {
    /// `Σ log det X_b + log(P_b − tr X_b)`, or `None` outside the interior.
    fn value(&self, x: &[CMat<T>]) -> Option<T> {
        let mut v = T::zero();
        for (xb, &p) in x.iter().zip(self.budgets) {
            let slack = p - linalg::trace_re(xb);
            if !(slack > T::zero()) {
                return None;
            }
            v += linalg::logdet_hpd(xb).ok()? + slack.ln();
        }
        Some(v)
    }

    fn add_derivatives(&self, x: &[CMat<T>], grad: &mut DVector<T>, hess: &mut DMatrix<T>) -> Result<()> {
        for (b, (xb, &p)) in x.iter().zip(self.budgets).enumerate() {
            let n = self.layout.sizes[b];
            let o = self.layout.offsets[b];
            let inv = linalg::inv_hpd(xb)?;
            let slack = p - linalg::trace_re(xb);
            let g = inv.clone() - linalg::scaled_eye(n, T::one() / slack);
            let mut gc = vec![T::zero(); herm_dim(n)];
            herm_to_coords(&g, &mut gc);
            for (a, v) in gc.into_iter().enumerate() {
                grad[o + a] += v;
            }
            self.layout.add_quad_form(hess, b, b, &inv, -T::one());
            // tr E_a is 1 on diagonal coordinates and 0 elsewhere
            let c = T::one() / (slack * slack);
            for a in 0..n {
                for a2 in 0..n {
                    hess[(o + a, o + a2)] -= c;
                }
            }
        }
        Ok(())
    }
}

/// Maximizes a concave `f` over `Π_b {X_b ⪰ 0, tr X_b ≤ budgets[b]}` by the
/// log-barrier method with damped Newton centering.
///
/// `f(x, true)` returns value, gradient and Hessian; `f(x, false)` may leave
/// the gradient and Hessian empty. `x0` must be strictly interior.
pub fn barrier_maximize<T: Real>(
    mut f: impl FnMut(&[CMat<T>], bool) -> Result<SecondOrder<T>>,
    budgets: &[T],
    x0: Vec<CMat<T>>,
    opts: &BarrierOptions<T>,
) -> Result<BarrierOutcome<T>> {
    if budgets.len() != x0.len() {
        return Err(Error::Shape(format!("{} budgets for {} blocks", budgets.len(), x0.len())));
    }
    let layout = BlockLayout::new(&x0.iter().map(|m| m.nrows()).collect::<Vec<_>>());
    let bar = Barrier { layout: &layout, budgets };
    if bar.value(&x0).is_none() {
        return Err(Error::Precondition("barrier start must be strictly interior".into()));
    }
    let m = T::from_usize(layout.sizes.iter().map(|n| n + 1).sum::<usize>()).unwrap();
    let mut x = x0;
    let mut t = opts.t0;
    let mut iters = 0;
    let merit = |f: &mut dyn FnMut(&[CMat<T>], bool) -> Result<SecondOrder<T>>, x: &[CMat<T>], t: T| -> Option<T> {
        let b = bar.value(x)?;
        let v = f(x, false).ok()?.0;
        let s = t * v + b;
        s.is_finite().then_some(s)
    };
    loop {
        loop {
            let (_, g, h) = f(&x, true)?;
            let mut grad = layout.to_vector(&g) * t;
            let mut hess = h * t;
            bar.add_derivatives(&x, &mut grad, &mut hess)?;
            let neg = -hess;
            let dir = match Cholesky::new(neg.clone()) {
                Some(ch) => ch.solve(&grad),
                None => {
                    // regularize a numerically indefinite Hessian
                    let scale = (0..layout.dim).fold(T::zero(), |a, i| a.max(neg[(i, i)].abs())).max(T::one());
                    let mut reg = T::lit(1e-12) * scale;
                    loop {
                        let mut shifted = neg.clone();
                        for i in 0..layout.dim {
                            shifted[(i, i)] += reg;
                        }
                        if let Some(ch) = Cholesky::new(shifted) {
                            break ch.solve(&grad);
                        }
                        reg *= T::lit(10.0);
                        if !(reg < T::lit(1e30)) {
                            return Err(Error::Degenerate("barrier Newton system cannot be factored".into()));
                        }
                    }
                }
            };
            let dec2 = grad.dot(&dir);
            // dec²/2 bounds the centering error of t·f + barrier; divide by t for f
            if !(dec2 * T::lit(0.5) > opts.newton_tol * t) {
                break;
            }
            iters += 1;
            if iters > opts.max_newton {
                return Err(Error::convergence("barrier Newton", opts.max_newton));
            }
            let base = merit(&mut f, &x, t).ok_or_else(|| Error::Domain("barrier merit undefined at the current point".into()))?;
            let step = layout.to_blocks(&dir);
            let mut s = T::one();
            let mut next = None;
            while s > T::lit(1e-14) {
                let cand: Vec<CMat<T>> = x.iter().zip(&step).map(|(a, d)| a + d * linalg::cplx(s)).collect();
                if let Some(v) = merit(&mut f, &cand, t) {
                    if v >= base + T::lit(0.25) * s * dec2 {
                        next = Some(cand);
                        break;
                    }
                }
                s *= T::lit(0.5);
            }
            match next {
                Some(c) => x = c,
                // merit differences are below working precision
                None => break,
            }
        }
        if m / t <= opts.gap_tol {
            let value = f(&x, false)?.0;
            return Ok(BarrierOutcome { x, value, newton_iters: iters });
        }
        t *= opts.growth;
    }
}
