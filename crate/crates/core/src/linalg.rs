//! Dense Hermitian helpers shared by the channel generators and the SDP solver.
//!
//! Hermitian eigendecompositions go through `faer`; everything else in the
//! crate works on `nalgebra` matrices. Both are column-major, so the
//! conversions below are plain element copies.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};

/// Eigenpairs of a Hermitian matrix with eigenvalues sorted in descending order.
#[derive(Debug, Clone)]
pub struct HermitianEigen {
    pub values: DVector<f64>,
    /// Column `k` is the unit eigenvector for `values[k]`.
    pub vectors: DMatrix<Complex64>,
}

impl HermitianEigen {
    pub fn max_value(&self) -> f64 {
        self.values[0]
    }

    pub fn min_value(&self) -> f64 {
        self.values[self.values.len() - 1]
    }

    /// Eigenvector of the first maximal eigenvalue.
    pub fn principal_vector(&self) -> DVector<Complex64> {
        self.vectors.column(0).into_owned()
    }
}

/// Eigendecomposition of the Hermitian part of `a` (the lower triangle is read).
pub fn hermitian_eigen(a: &DMatrix<Complex64>) -> Result<HermitianEigen> {
    let n = a.nrows();
    if n != a.ncols() || n == 0 {
        return Err(crate::error::dims("hermitian_eigen", "square nonempty", format!("{}x{}", a.nrows(), a.ncols())));
    }
    let fa = faer::MatRef::from_column_major_slice(a.as_slice(), n, n);
    let evd = fa.self_adjoint_eigen(faer::Side::Lower).map_err(|e| Error::Solver {
        status: format!("eigendecomposition failed: {e:?}"),
        iterations: 0,
    })?;
    let s = evd.S().column_vector();
    let u = evd.U();
    // faer sorts ascending; flip so index 0 is the largest.
    let values = DVector::from_fn(n, |k, _| s[n - 1 - k].re);
    let vectors = DMatrix::from_fn(n, n, |i, k| u[(i, n - 1 - k)]);
    Ok(HermitianEigen { values, vectors })
}

/// Which operand view to use in [`gemm`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Op {
    N,
    /// Conjugate transpose.
    H,
}

/// `dst = alpha · op(a) · op(b) + (dst if accumulate)`, computed by faer on
/// zero-copy views of the column-major nalgebra storage.
pub(crate) fn gemm(
    dst: &mut DMatrix<Complex64>,
    accumulate: bool,
    a: &DMatrix<Complex64>,
    op_a: Op,
    b: &DMatrix<Complex64>,
    op_b: Op,
    alpha: Complex64,
) {
    use faer::{linalg::matmul::matmul, Accum, MatMut, MatRef, Par};
    let (m, n) = (dst.nrows(), dst.ncols());
    let av = MatRef::from_column_major_slice(a.as_slice(), a.nrows(), a.ncols());
    let bv = MatRef::from_column_major_slice(b.as_slice(), b.nrows(), b.ncols());
    let dv = MatMut::from_column_major_slice_mut(dst.as_mut_slice(), m, n);
    let acc = if accumulate { Accum::Add } else { Accum::Replace };
    match (op_a, op_b) {
        (Op::N, Op::N) => matmul(dv, acc, av, bv, alpha, Par::Seq),
        (Op::N, Op::H) => matmul(dv, acc, av, bv.adjoint(), alpha, Par::Seq),
        (Op::H, Op::N) => matmul(dv, acc, av.adjoint(), bv, alpha, Par::Seq),
        (Op::H, Op::H) => matmul(dv, acc, av.adjoint(), bv.adjoint(), alpha, Par::Seq),
    }
}

/// Projection onto the PSD cone in Frobenius norm: negative eigenvalues are zeroed.
///
/// Returns the projected matrix together with the eigendecomposition of the input.
pub fn project_psd(a: &DMatrix<Complex64>) -> Result<(DMatrix<Complex64>, HermitianEigen)> {
    let eig = hermitian_eigen(a)?;
    let n = a.nrows();
    let positive = eig.values.iter().take_while(|&&v| v > 0.0).count();
    let mut scaled = DMatrix::<Complex64>::zeros(n, positive);
    for k in 0..positive {
        let root = eig.values[k].sqrt();
        for i in 0..n {
            scaled[(i, k)] = eig.vectors[(i, k)] * root;
        }
    }
    let mut out = DMatrix::zeros(n, n);
    gemm(&mut out, false, &scaled, Op::N, &scaled, Op::H, Complex64::new(1.0, 0.0));
    hermitize(&mut out);
    Ok((out, eig))
}

/// Replaces `a` by `(a + a^H) / 2`.
pub fn hermitize(a: &mut DMatrix<Complex64>) {
    let n = a.nrows();
    for j in 0..n {
        a[(j, j)].im = 0.0;
        for i in (j + 1)..n {
            let avg = (a[(i, j)] + a[(j, i)].conj()) * 0.5;
            a[(i, j)] = avg;
            a[(j, i)] = avg.conj();
        }
    }
}

/// Nuclear norm minus spectral norm of a Hermitian matrix.
///
/// Nonnegative, and zero exactly when the matrix has rank at most one.
pub fn rank_residual(a: &DMatrix<Complex64>) -> Result<f64> {
    let eig = hermitian_eigen(a)?;
    Ok(rank_residual_from_values(eig.values.as_slice()))
}

pub(crate) fn rank_residual_from_values(values: &[f64]) -> f64 {
    let nuclear: f64 = values.iter().map(|v| v.abs()).sum();
    let spectral = values.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    (nuclear - spectral).max(0.0)
}

/// Symmetric PSD square root of a real symmetric matrix.
///
/// Eigenvalues in `[-tol, 0)` are clipped to zero; anything more negative is
/// reported as [`Error::NotPsd`].
pub fn psd_sqrt(r: &DMatrix<f64>, tol: f64) -> Result<DMatrix<f64>> {
    let n = r.nrows();
    if n != r.ncols() {
        return Err(crate::error::dims("psd_sqrt", "square", format!("{}x{}", r.nrows(), r.ncols())));
    }
    let sym = (r + r.transpose()) * 0.5;
    let eig = sym.symmetric_eigen();
    let min = eig.eigenvalues.iter().copied().fold(f64::INFINITY, f64::min);
    if min < -tol {
        return Err(Error::NotPsd { min_eigenvalue: min });
    }
    let roots = eig.eigenvalues.map(|v| v.max(0.0).sqrt());
    let v = &eig.eigenvectors;
    Ok(v * DMatrix::from_diagonal(&roots) * v.transpose())
}

/// Quadratic form `x^H A x`, real part (exact for Hermitian `A`).
pub fn quad_form(a: &DMatrix<Complex64>, x: &DVector<Complex64>) -> f64 {
    (x.adjoint() * a * x)[(0, 0)].re
}

/// Real Frobenius inner product `Re tr(A^H B)`.
pub fn frob_inner(a: &DMatrix<Complex64>, b: &DMatrix<Complex64>) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| (x.conj() * y).re).sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn random_hermitian(n: usize, seed: u64) -> DMatrix<Complex64> {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let mut a = DMatrix::from_fn(n, n, |_, _| Complex64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5));
        hermitize(&mut a);
        a
    }

    #[test]
    fn eigen_reconstructs_and_sorts_descending() {
        let a = random_hermitian(7, 3);
        let eig = hermitian_eigen(&a).unwrap();
        for k in 1..7 {
            assert!(eig.values[k - 1] >= eig.values[k]);
        }
        let d = DMatrix::from_diagonal(&eig.values.map(|v| Complex64::new(v, 0.0)));
        let rebuilt = &eig.vectors * d * eig.vectors.adjoint();
        assert_relative_eq!((rebuilt - &a).norm(), 0.0, epsilon = 1e-12);
    }

    #[test]
    fn gemm_matches_nalgebra() {
        let a = DMatrix::from_fn(4, 3, |i, j| Complex64::new(i as f64 - 1.0, j as f64 * 0.5));
        let b = DMatrix::from_fn(4, 5, |i, j| Complex64::new((i * j) as f64 * 0.1, 1.0 - i as f64));
        let mut d = DMatrix::from_element(3, 5, Complex64::new(1.0, 0.0));
        let alpha = Complex64::new(0.5, -2.0);
        let expect = &d + a.adjoint() * &b * alpha;
        gemm(&mut d, true, &a, Op::H, &b, Op::N, alpha);
        assert_relative_eq!((d - expect).norm(), 0.0, epsilon = 1e-12);
        let mut e = DMatrix::zeros(4, 4);
        gemm(&mut e, false, &b, Op::N, &b, Op::H, Complex64::new(1.0, 0.0));
        assert_relative_eq!((e - &b * b.adjoint()).norm(), 0.0, epsilon = 1e-12);
    }

    #[test]
    fn psd_projection_is_idempotent_and_psd() {
        let a = random_hermitian(6, 11);
        let (p, _) = project_psd(&a).unwrap();
        let eig = hermitian_eigen(&p).unwrap();
        assert!(eig.min_value() > -1e-12);
        let (pp, _) = project_psd(&p).unwrap();
        assert_relative_eq!((pp - &p).norm(), 0.0, epsilon = 1e-12);
    }

    #[test]
    fn rank_residual_of_outer_product_is_zero() {
        let x = DVector::from_fn(5, |i, _| Complex64::from_polar(1.0, 0.3 * i as f64));
        let w = &x * x.adjoint();
        assert!(rank_residual(&w).unwrap() < 1e-12);
        let id = DMatrix::<Complex64>::identity(5, 5);
        assert_relative_eq!(rank_residual(&id).unwrap(), 4.0, epsilon = 1e-12);
    }

    #[test]
    fn psd_sqrt_squares_back() {
        let b = DMatrix::from_fn(4, 4, |i, j| ((i * 3 + j * 5) % 7) as f64 / 7.0);
        let r = &b * b.transpose();
        let s = psd_sqrt(&r, 1e-9).unwrap();
        assert_relative_eq!((&s * &s - &r).norm(), 0.0, epsilon = 1e-10);
        let neg = DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, -0.5]));
        assert!(matches!(psd_sqrt(&neg, 1e-9), Err(Error::NotPsd { .. })));
    }
}
