//! Dense complex Hermitian matrix primitives.
//!
//! Matrices are plain `DMatrix<Complex<T>>`. Functions that return Hermitian
//! results symmetrize them before returning, so accumulated round-off never
//! leaks an anti-Hermitian part into callers.

use nalgebra::{Cholesky, Complex, DMatrix, SymmetricEigen};

use crate::error::{Error, Result};
use crate::scalar::Real;

pub type CMat<T> = DMatrix<Complex<T>>;

#[inline]
pub fn cplx<T: Real>(re: T) -> Complex<T> {
    Complex::new(re, T::zero())
}

pub fn eye<T: Real>(n: usize) -> CMat<T> {
    CMat::identity(n, n)
}

pub fn zeros<T: Real>(n: usize, m: usize) -> CMat<T> {
    CMat::zeros(n, m)
}

pub fn scaled_eye<T: Real>(n: usize, a: T) -> CMat<T> {
    CMat::from_diagonal_element(n, n, cplx(a))
}

#[inline]
pub fn scale<T: Real>(m: &CMat<T>, a: T) -> CMat<T> {
    m * cplx(a)
}

/// Returns `(M + Mᴴ)/2`.
pub fn hermitianize<T: Real>(m: &CMat<T>) -> Result<CMat<T>> {
    if !m.is_square() {
        return Err(Error::Shape(format!("hermitianize needs a square matrix, got {}x{}", m.nrows(), m.ncols())));
    }
    Ok(herm(m))
}

/// Infallible [`hermitianize`] for matrices already known to be square.
pub fn herm<T: Real>(m: &CMat<T>) -> CMat<T> {
    let n = m.nrows();
    let half = T::lit(0.5);
    CMat::from_fn(n, n, |i, j| (m[(i, j)] + m[(j, i)].conj()) * half)
}

/// `Re tr(Xᴴ Y)`.
pub fn inner<T: Real>(x: &CMat<T>, y: &CMat<T>) -> Result<T> {
    if x.shape() != y.shape() {
        return Err(Error::Shape(format!("inner of {:?} and {:?}", x.shape(), y.shape())));
    }
    Ok(re_inner(x, y))
}

/// [`inner`] without the shape check (panics in debug builds on mismatch).
#[inline]
pub fn re_inner<T: Real>(x: &CMat<T>, y: &CMat<T>) -> T {
    debug_assert_eq!(x.shape(), y.shape());
    x.iter().zip(y.iter()).fold(T::zero(), |acc, (a, b)| acc + a.re * b.re + a.im * b.im)
}

#[inline]
pub fn trace_re<T: Real>(m: &CMat<T>) -> T {
    (0..m.nrows().min(m.ncols())).fold(T::zero(), |acc, i| acc + m[(i, i)].re)
}

#[inline]
pub fn fro_norm2<T: Real>(m: &CMat<T>) -> T {
    m.iter().fold(T::zero(), |acc, z| acc + z.norm_sqr())
}

/// Hermitian eigendecomposition with eigenvalues sorted ascending.
pub fn eigh<T: Real>(m: &CMat<T>) -> (Vec<T>, CMat<T>) {
    let n = m.nrows();
    let eig = SymmetricEigen::new(herm(m));
    let mut idx: Vec<usize> = (0..n).collect();
    idx.sort_by(|&a, &b| eig.eigenvalues[a].partial_cmp(&eig.eigenvalues[b]).unwrap_or(std::cmp::Ordering::Equal));
    let vals = idx.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vecs = CMat::from_fn(n, n, |r, c| eig.eigenvectors[(r, idx[c])]);
    (vals, vecs)
}

/// `U diag(d) Uᴴ`, hermitianized.
pub fn from_eig<T: Real>(d: &[T], u: &CMat<T>) -> CMat<T> {
    let mut ud = u.clone();
    for (c, &v) in d.iter().enumerate() {
        let mut col = ud.column_mut(c);
        col *= cplx(v);
    }
    herm(&(ud * u.adjoint()))
}

/// Applies `f` to the eigenvalues of a Hermitian matrix.
pub fn eig_map<T: Real>(m: &CMat<T>, f: impl Fn(T) -> T) -> CMat<T> {
    let (d, u) = eigh(m);
    let fd: Vec<T> = d.into_iter().map(f).collect();
    from_eig(&fd, &u)
}

pub fn lambda_min<T: Real>(m: &CMat<T>) -> T {
    eigh(m).0.first().copied().unwrap_or_else(T::zero)
}

pub fn lambda_max<T: Real>(m: &CMat<T>) -> T {
    eigh(m).0.last().copied().unwrap_or_else(T::zero)
}

/// Spectral norm of a Hermitian matrix.
pub fn herm_norm2<T: Real>(m: &CMat<T>) -> T {
    let (d, _) = eigh(m);
    d.into_iter().fold(T::zero(), |acc, v| acc.max(v.abs()))
}

fn cholesky<T: Real>(m: &CMat<T>, what: &str) -> Result<Cholesky<Complex<T>, nalgebra::Dyn>> {
    if !m.is_square() {
        return Err(Error::Shape(format!("{what}: matrix is {}x{}", m.nrows(), m.ncols())));
    }
    let not_pd = || Error::Domain(format!("{what}: matrix is not positive definite"));
    let ch = Cholesky::new(herm(m)).ok_or_else(not_pd)?;
    // complex square roots never fail, so check the pivots explicitly
    let l = ch.l_dirty();
    let tiny = T::default_epsilon().sqrt();
    if (0..l.nrows()).any(|i| !(l[(i, i)].re > T::zero()) || l[(i, i)].im.abs() > tiny * l[(i, i)].re || !l[(i, i)].re.is_finite()) {
        return Err(not_pd());
    }
    Ok(ch)
}

/// Natural log-determinant of a Hermitian positive definite matrix.
pub fn logdet_hpd<T: Real>(m: &CMat<T>) -> Result<T> {
    let ch = cholesky(m, "logdet_hpd")?;
    let l = ch.l_dirty();
    let two = T::lit(2.0);
    Ok((0..l.nrows()).fold(T::zero(), |acc, i| acc + two * l[(i, i)].re.ln()))
}

/// Inverse of a Hermitian positive definite matrix.
pub fn inv_hpd<T: Real>(m: &CMat<T>) -> Result<CMat<T>> {
    Ok(herm(&cholesky(m, "inv_hpd")?.inverse()))
}

/// Projection onto the PSD cone in Frobenius norm.
pub fn psd_project<T: Real>(m: &CMat<T>) -> CMat<T> {
    eig_map(m, |v| v.max(T::zero()))
}

/// Raises every eigenvalue of `b` to at least `rel·‖b‖₂` (absolute floor `rel` when `b = 0`).
pub fn floor_eigenvalues<T: Real>(b: &CMat<T>, rel: T) -> CMat<T> {
    let (d, u) = eigh(b);
    let norm = d.iter().fold(T::zero(), |acc, v| acc.max(v.abs()));
    let floor = if norm > T::zero() { rel * norm } else { rel };
    let fd: Vec<T> = d.into_iter().map(|v| v.max(floor)).collect();
    from_eig(&fd, &u)
}

/// Generalized Hermitian eigendecomposition `A V = B V diag(σ)` with `Vᴴ B V = I`.
///
/// `B = L Lᴴ` is factored and the ordinary problem `L⁻¹ A L⁻ᴴ` is solved.
/// Eigenvalues are returned in descending order.
pub fn gen_eig<T: Real>(a: &CMat<T>, b: &CMat<T>) -> Result<(CMat<T>, Vec<T>)> {
    if a.shape() != b.shape() || !a.is_square() {
        return Err(Error::Shape(format!("gen_eig of {:?} and {:?}", a.shape(), b.shape())));
    }
    let ch = cholesky(b, "gen_eig")?;
    let l = ch.l();
    let n = a.nrows();
    // W = L⁻¹ A, then C = L⁻¹ Wᴴ = L⁻¹ A L⁻ᴴ since A is Hermitian.
    let w = l.solve_lower_triangular(&herm(a)).ok_or_else(|| Error::Domain("gen_eig: singular factor".into()))?;
    let c = l
        .solve_lower_triangular(&w.adjoint())
        .ok_or_else(|| Error::Domain("gen_eig: singular factor".into()))?;
    let (mut sigma, mut u) = eigh(&c);
    sigma.reverse();
    let u_desc = CMat::from_fn(n, n, |r, col| u[(r, n - 1 - col)]);
    u = u_desc;
    let v = l
        .adjoint()
        .solve_upper_triangular(&u)
        .ok_or_else(|| Error::Domain("gen_eig: singular factor".into()))?;
    Ok((v, sigma))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn rand_mat(rng: &mut ChaCha8Rng, n: usize, m: usize) -> CMat<f64> {
        CMat::from_fn(n, m, |_, _| Complex::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5))
    }

    fn rand_herm(rng: &mut ChaCha8Rng, n: usize) -> CMat<f64> {
        herm(&rand_mat(rng, n, n))
    }

    fn rand_hpd(rng: &mut ChaCha8Rng, n: usize) -> CMat<f64> {
        let g = rand_mat(rng, n, n);
        herm(&(&g * g.adjoint())) + eye(n) * cplx(0.1)
    }

    fn diag(d: &[f64]) -> CMat<f64> {
        CMat::from_fn(d.len(), d.len(), |i, j| if i == j { cplx(d[i]) } else { cplx(0.0) })
    }

    #[test]
    fn inner_basics() {
        let i2 = eye::<f64>(2);
        assert_eq!(inner(&i2, &i2).unwrap(), 2.0);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let x = rand_herm(&mut rng, 3);
        assert_eq!(inner(&x, &zeros(3, 3)).unwrap(), 0.0);
        let y = rand_herm(&mut rng, 3);
        let mut brute = 0.0;
        for i in 0..3 {
            for j in 0..3 {
                brute += (x[(i, j)].conj() * y[(i, j)]).re;
            }
        }
        assert!((inner(&x, &y).unwrap() - brute).abs() < 1e-14);
        assert!((inner(&x, &y).unwrap() - inner(&y, &x).unwrap()).abs() < 1e-14);
        assert!(matches!(inner(&x, &eye(2)), Err(Error::Shape(_))));
    }

    #[test]
    fn logdet_cases() {
        assert!(logdet_hpd(&eye::<f64>(4)).unwrap().abs() < 1e-15);
        let v = logdet_hpd(&scaled_eye::<f64>(3, 2.0)).unwrap();
        assert!((v - 3.0 * 2f64.ln()).abs() < 1e-14);
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let m = rand_hpd(&mut rng, 4);
        let (d, _) = eigh(&m);
        let oracle: f64 = d.iter().map(|v| v.ln()).sum();
        assert!((logdet_hpd(&m).unwrap() - oracle).abs() < 1e-12);
        assert!(matches!(logdet_hpd(&diag(&[1.0, -1.0])), Err(Error::Domain(_))));
    }

    #[test]
    fn psd_projection() {
        let p = psd_project(&diag(&[1.0, -2.0]));
        assert!((&p - diag(&[1.0, 0.0])).norm() < 1e-15);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let g = rand_hpd(&mut rng, 3);
        assert!((psd_project(&g) - &g).norm() < 1e-12);
    }

    #[test]
    fn psd_projection_beats_grid_on_2x2() {
        // PSD 2x2 matrices parametrized as L Lᴴ with L lower triangular.
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..5 {
            let m = rand_herm(&mut rng, 2) * cplx(3.0);
            let proj = psd_project(&m);
            let best = (&proj - &m).norm();
            let steps = 24;
            let grid = |i: usize, lo: f64, hi: f64| lo + (hi - lo) * i as f64 / steps as f64;
            let mut grid_best = f64::INFINITY;
            for a in 0..=steps {
                for b in 0..=steps {
                    for c in 0..=steps {
                        for d in 0..=steps {
                            let l = CMat::from_row_slice(
                                2,
                                2,
                                &[
                                    cplx(grid(a, 0.0, 2.0)),
                                    cplx(0.0),
                                    Complex::new(grid(b, -2.0, 2.0), grid(c, -2.0, 2.0)),
                                    cplx(grid(d, 0.0, 2.0)),
                                ],
                            );
                            let q = &l * l.adjoint();
                            grid_best = grid_best.min((q - &m).norm());
                        }
                    }
                }
            }
            assert!(best <= grid_best + 1e-12, "{best} vs grid {grid_best}");
        }
    }

    #[test]
    fn hermitianize_cases() {
        let m = CMat::from_row_slice(2, 2, &[cplx(0.0), cplx(1.0), cplx(0.0), cplx(0.0)]);
        let h = hermitianize(&m).unwrap();
        assert_eq!(h, CMat::from_row_slice(2, 2, &[cplx(0.0), cplx(0.5), cplx(0.5), cplx(0.0)]));
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let x = rand_herm(&mut rng, 3);
        assert!((hermitianize(&x).unwrap() - &x).norm() < 1e-15);
        let g = rand_mat(&mut rng, 3, 3);
        let h = hermitianize(&g).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                let avg = (g[(i, j)] + g[(j, i)].conj()) * 0.5;
                assert!((h[(i, j)] - avg).norm() < 1e-15);
            }
        }
        assert!(matches!(hermitianize(&rand_mat(&mut rng, 2, 3)), Err(Error::Shape(_))));
    }

    #[test]
    fn gen_eig_identity_and_zero() {
        let a = diag(&[3.0, 1.0, 2.0]);
        let (v, s) = gen_eig(&a, &eye(3)).unwrap();
        assert!((s[0] - 3.0).abs() < 1e-14 && (s[1] - 2.0).abs() < 1e-14 && (s[2] - 1.0).abs() < 1e-14);
        assert!((&a * &v - &v * diag(&s)).norm() < 1e-13);
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let b = rand_hpd(&mut rng, 3);
        let (v, s) = gen_eig(&zeros(3, 3), &b).unwrap();
        assert!(s.iter().all(|x| x.abs() < 1e-14));
        assert!((v.adjoint() * &b * &v - eye(3)).norm() < 1e-12);
        assert!(matches!(gen_eig(&a, &diag(&[1.0, 0.0, -1.0])), Err(Error::Domain(_))));
    }

    #[test]
    fn gen_eig_residuals_100_seeds() {
        for seed in 0..100 {
            let mut rng = ChaCha8Rng::seed_from_u64(100 + seed);
            let g = rand_mat(&mut rng, 4, 4);
            let a = herm(&(&g * g.adjoint()));
            let b = rand_hpd(&mut rng, 4);
            let (v, s) = gen_eig(&a, &b).unwrap();
            assert!((&a * &v - &b * &v * diag(&s)).norm() <= 1e-10);
            assert!((v.adjoint() * &b * &v - eye(4)).norm() <= 1e-10);
            assert!(s.windows(2).all(|w| w[0] >= w[1]));
            assert!(s.iter().all(|&x| x >= -1e-12));
        }
    }

    #[test]
    fn floor_makes_psd_factorizable() {
        let b = diag(&[2.0, 0.0]);
        assert!(logdet_hpd(&b).is_err());
        let f = floor_eigenvalues(&b, 1e-12);
        assert!(logdet_hpd(&f).is_ok());
    }

    #[test]
    fn single_precision_works() {
        let a = CMat::<f32>::from_diagonal_element(2, 2, Complex::new(2.0f32, 0.0));
        assert!((logdet_hpd(&a).unwrap() - 2.0 * 2f32.ln()).abs() < 1e-6);
        let (_, s) = gen_eig(&a, &eye(2)).unwrap();
        assert!((s[0] - 2.0).abs() < 1e-6);
    }
}
