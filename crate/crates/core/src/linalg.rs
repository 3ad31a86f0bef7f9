//! Dense complex helpers shared by every module.
//!
//! Matrices are `nalgebra::DMatrix<Complex64>`. The vectorization convention
//! is column stacking, which is also nalgebra's storage order, so `vec(X)` is
//! a copy of the backing slice.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type C64 = Complex64;
pub type CMat = DMatrix<C64>;
pub type CVec = DVector<C64>;

#[inline]
pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

pub fn identity(n: usize) -> CMat {
    CMat::identity(n, n)
}

pub fn zeros(rows: usize, cols: usize) -> CMat {
    CMat::zeros(rows, cols)
}

/// Matrix unit `|i><j|` in `M_n`.
pub fn unit(n: usize, i: usize, j: usize) -> CMat {
    let mut m = zeros(n, n);
    m[(i, j)] = c(1.0, 0.0);
    m
}

/// Matrix units of `M_n` in row-major order: index `a = i * n + j` is `|i><j|`.
pub fn matrix_units(n: usize) -> Vec<CMat> {
    (0..n * n).map(|a| unit(n, a / n, a % n)).collect()
}

pub fn kron(a: &CMat, b: &CMat) -> CMat {
    a.kronecker(b)
}

pub fn vec(x: &CMat) -> CVec {
    CVec::from_column_slice(x.as_slice())
}

pub fn unvec(v: &CVec, rows: usize, cols: usize) -> CMat {
    assert_eq!(v.len(), rows * cols, "unvec length");
    CMat::from_column_slice(rows, cols, v.as_slice())
}

/// Action matrix of `X -> A X B` under column stacking: `B^T (x) A`.
pub fn sandwich_action(a: &CMat, b: &CMat) -> CMat {
    kron(&b.transpose(), a)
}

pub fn max_abs(m: &CMat) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

pub fn max_abs_diff(a: &CMat, b: &CMat) -> f64 {
    assert_eq!(a.shape(), b.shape(), "max_abs_diff shapes");
    a.iter()
        .zip(b.iter())
        .map(|(x, y)| (x - y).norm())
        .fold(0.0, f64::max)
}

pub fn hermitian_residual(m: &CMat) -> f64 {
    if !m.is_square() {
        return f64::INFINITY;
    }
    max_abs_diff(m, &m.adjoint())
}

pub fn hermitian_part(m: &CMat) -> CMat {
    (m + m.adjoint()).scale(0.5)
}

/// Checks Hermiticity against `tol * max(1, max|m|)`.
pub fn ensure_hermitian(m: &CMat, what: &'static str, tol: f64) -> Result<()> {
    let residual = hermitian_residual(m);
    if residual <= tol * max_abs(m).max(1.0) {
        Ok(())
    } else {
        Err(Error::NotHermitian { what, residual })
    }
}

pub fn commutator(a: &CMat, b: &CMat) -> CMat {
    a * b - b * a
}

pub fn trace(m: &CMat) -> C64 {
    m.diagonal().iter().sum()
}

/// Eigen-decomposition of the Hermitian part of `m`, eigenvalues ascending.
pub fn hermitian_eigen(m: &CMat) -> (Vec<f64>, CMat) {
    let n = m.nrows();
    if n == 0 {
        return (Vec::new(), zeros(0, 0));
    }
    let eig = hermitian_part(m).symmetric_eigen();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let mut vectors = zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        vectors.set_column(dst, &eig.eigenvectors.column(src));
    }
    (values, vectors)
}

pub fn hermitian_eigenvalues(m: &CMat) -> Vec<f64> {
    hermitian_eigen(m).0
}

pub fn min_eigenvalue(m: &CMat) -> f64 {
    hermitian_eigenvalues(m).first().copied().unwrap_or(0.0)
}

/// Minimal-norm least-squares solution of `a x = b`.
///
/// The singular triples are read off the Hermitian eigenpairs
/// `(sigma, [u; v] / sqrt 2)` of `[[0, a], [a^+, 0]]`; the SVD of nalgebra
/// does not always recompose matrices with clustered singular values.
/// Tall systems are first reduced by a Householder QR. Singular values
/// below `rcond * sigma_max` are treated as zero.
pub fn lstsq(a: &CMat, b: &CVec, rcond: f64) -> Result<CVec> {
    if a.nrows() != b.len() {
        return Err(Error::Shape(format!(
            "lstsq: {} equations but rhs of length {}",
            a.nrows(),
            b.len()
        )));
    }
    let (m, n) = a.shape();
    if n == 0 || m == 0 {
        return Ok(CVec::zeros(n));
    }
    if m > n {
        // a = q r with orthonormal columns q, so a^+ = r^+ q^+
        let qr = a.clone().qr();
        return lstsq(&qr.r(), &(qr.q().adjoint() * b), rcond);
    }
    let mut aug = zeros(m + n, m + n);
    set_block(&mut aug, 0, n, &a.adjoint());
    set_block(&mut aug, n, 0, a);
    let (values, vectors) = hermitian_eigen(&aug);
    let smax = values.last().copied().unwrap_or(0.0);
    let eps = (rcond * smax).max(f64::MIN_POSITIVE);
    let mut x = CVec::zeros(n);
    for (k, &sigma) in values.iter().enumerate().rev() {
        if sigma <= eps {
            break;
        }
        let w = vectors.column(k);
        let v = w.rows(0, n);
        let u = w.rows(n, m);
        let coeff = u.dotc(b) * (2.0 / sigma);
        x += v * coeff;
    }
    if x.iter().any(|z| !z.is_finite()) {
        return Err(Error::Numerical("lstsq produced non-finite values".into()));
    }
    Ok(x)
}

/// Block `(bi, bj)` of size `rows x cols` from a block matrix.
pub fn block(m: &CMat, bi: usize, bj: usize, rows: usize, cols: usize) -> CMat {
    m.view((bi * rows, bj * cols), (rows, cols)).into_owned()
}

pub fn set_block(m: &mut CMat, row0: usize, col0: usize, b: &CMat) {
    m.view_mut((row0, col0), b.shape()).copy_from(b);
}

/// Stacks matrices vertically; all must share a column count.
pub fn vstack(parts: &[CMat]) -> CMat {
    let cols = parts.first().map_or(0, |p| p.ncols());
    let rows = parts.iter().map(|p| p.nrows()).sum();
    let mut out = zeros(rows, cols);
    let mut r = 0;
    for p in parts {
        assert_eq!(p.ncols(), cols, "vstack column mismatch");
        set_block(&mut out, r, 0, p);
        r += p.nrows();
    }
    out
}

pub fn hstack(parts: &[CMat]) -> CMat {
    let rows = parts.first().map_or(0, |p| p.nrows());
    let cols = parts.iter().map(|p| p.ncols()).sum();
    let mut out = zeros(rows, cols);
    let mut col = 0;
    for p in parts {
        assert_eq!(p.nrows(), rows, "hstack row mismatch");
        set_block(&mut out, 0, col, p);
        col += p.ncols();
    }
    out
}

pub fn block_diag(parts: &[CMat]) -> CMat {
    let rows = parts.iter().map(|p| p.nrows()).sum();
    let cols = parts.iter().map(|p| p.ncols()).sum();
    let mut out = zeros(rows, cols);
    let (mut r, mut col) = (0, 0);
    for p in parts {
        set_block(&mut out, r, col, p);
        r += p.nrows();
        col += p.ncols();
    }
    out
}

pub fn check_square(m: &CMat, n: usize, what: &str) -> Result<()> {
    if m.nrows() == n && m.ncols() == n {
        Ok(())
    } else {
        Err(Error::Shape(format!(
            "{what}: expected {n}x{n}, found {}x{}",
            m.nrows(),
            m.ncols()
        )))
    }
}
