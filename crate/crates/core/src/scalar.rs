//! Scalar abstraction shared by every numerical routine in the crate.
//!
//! All algorithms are written against [`Real`], which is implemented for
//! `f32` and `f64`. Matrix entries are `Complex<T>`.

use std::fmt;

use nalgebra::{Complex, DMatrix, RealField};
use num_traits::{FromPrimitive, ToPrimitive};

/// Floating point scalar usable as the real part of matrix entries.
pub trait Real:
    RealField + Copy + FromPrimitive + ToPrimitive + fmt::Debug + fmt::Display + fmt::LowerExp + 'static
{
    /// Converts an `f64` literal. Panics only for non-representable values,
    /// which cannot happen for `f32`/`f64`.
    #[inline]
    fn lit(x: f64) -> Self {
        <Self as FromPrimitive>::from_f64(x).expect("literal representable")
    }

    #[inline]
    fn to_f64_lossy(self) -> f64 {
        ToPrimitive::to_f64(&self).unwrap_or(f64::NAN)
    }

    /// Machine epsilon.
    fn eps() -> Self;
}

impl Real for f32 {
    fn eps() -> Self {
        f32::EPSILON
    }
}

impl Real for f64 {
    fn eps() -> Self {
        f64::EPSILON
    }
}

/// Complex matrix with entries over `T`.
pub type CMat<T> = DMatrix<Complex<T>>;

#[inline]
pub fn cx<T: Real>(re: f64, im: f64) -> Complex<T> {
    Complex::new(T::lit(re), T::lit(im))
}

#[inline]
pub fn creal<T: Real>(re: T) -> Complex<T> {
    Complex::new(re, T::zero())
}

/// Frobenius norm of a complex matrix.
pub fn fro<T: Real>(m: &CMat<T>) -> T {
    let mut acc = T::zero();
    for z in m.iter() {
        acc += z.norm_sqr();
    }
    acc.sqrt()
}

/// Largest singular value. Zero for empty matrices.
pub fn spectral_norm<T: Real>(m: &CMat<T>) -> T {
    if m.nrows() == 0 || m.ncols() == 0 {
        return T::zero();
    }
    m.clone()
        .singular_values()
        .iter()
        .fold(T::zero(), |a, &b| if b > a { b } else { a })
}

/// Hermitian part `(M + M*)/2`.
pub fn hermitian_part<T: Real>(m: &CMat<T>) -> CMat<T> {
    (m + m.adjoint()) * creal(T::lit(0.5))
}

/// Eigenvalues of a Hermitian matrix in ascending order.
pub fn hermitian_eigenvalues<T: Real>(m: &CMat<T>) -> Vec<T> {
    if m.nrows() == 0 {
        return Vec::new();
    }
    let mut ev: Vec<T> = hermitian_part(m).symmetric_eigenvalues().iter().copied().collect();
    ev.sort_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal));
    ev
}

/// Smallest eigenvalue of a Hermitian matrix, `+inf`-like zero-size convention: returns 0 for empty.
pub fn min_eigenvalue<T: Real>(m: &CMat<T>) -> T {
    hermitian_eigenvalues(m).first().copied().unwrap_or_else(T::zero)
}

/// Kronecker product `a ⊗ b`.
pub fn kron<T: Real>(a: &CMat<T>, b: &CMat<T>) -> CMat<T> {
    let (ar, ac) = a.shape();
    let (br, bc) = b.shape();
    let mut out = CMat::zeros(ar * br, ac * bc);
    for i in 0..ar {
        for j in 0..ac {
            let s = a[(i, j)];
            if s == Complex::new(T::zero(), T::zero()) {
                continue;
            }
            for p in 0..br {
                for q in 0..bc {
                    out[(i * br + p, j * bc + q)] = s * b[(p, q)];
                }
            }
        }
    }
    out
}

/// Block-diagonal assembly of arbitrary (possibly rectangular or empty) blocks.
pub fn block_diag<T: Real>(blocks: &[CMat<T>]) -> CMat<T> {
    let rows: usize = blocks.iter().map(|b| b.nrows()).sum();
    let cols: usize = blocks.iter().map(|b| b.ncols()).sum();
    let mut out = CMat::zeros(rows, cols);
    let (mut r, mut c) = (0, 0);
    for b in blocks {
        out.view_mut((r, c), b.shape()).copy_from(b);
        r += b.nrows();
        c += b.ncols();
    }
    out
}

/// Vertical concatenation; all blocks must share the column count.
pub fn vstack<T: Real>(blocks: &[CMat<T>], cols: usize) -> CMat<T> {
    let rows: usize = blocks.iter().map(|b| b.nrows()).sum();
    let mut out = CMat::zeros(rows, cols);
    let mut r = 0;
    for b in blocks {
        debug_assert_eq!(b.ncols(), cols);
        out.view_mut((r, 0), b.shape()).copy_from(b);
        r += b.nrows();
    }
    out
}

/// Horizontal concatenation; all blocks must share the row count.
pub fn hstack<T: Real>(blocks: &[CMat<T>], rows: usize) -> CMat<T> {
    let cols: usize = blocks.iter().map(|b| b.ncols()).sum();
    let mut out = CMat::zeros(rows, cols);
    let mut c = 0;
    for b in blocks {
        debug_assert_eq!(b.nrows(), rows);
        out.view_mut((0, c), b.shape()).copy_from(b);
        c += b.ncols();
    }
    out
}

/// Determinant of a square complex matrix; 1 for the empty matrix.
pub fn det<T: Real>(m: &CMat<T>) -> Complex<T> {
    if m.nrows() == 0 {
        return creal(T::one());
    }
    m.clone().lu().determinant()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kron_shapes_and_values() {
        let a = CMat::<f64>::from_row_slice(1, 2, &[cx(1.0, 0.0), cx(0.0, 2.0)]);
        let b = CMat::<f64>::identity(2, 2);
        let k = kron(&a, &b);
        assert_eq!(k.shape(), (2, 4));
        assert_eq!(k[(1, 3)], cx(0.0, 2.0));
        assert_eq!(k[(0, 1)], cx(0.0, 0.0));
    }

    #[test]
    fn empty_determinant_is_one() {
        assert_eq!(det(&CMat::<f64>::zeros(0, 0)), cx(1.0, 0.0));
    }

    #[test]
    fn complex_hermitian_eigenvalues() {
        let h = CMat::<f64>::from_row_slice(2, 2, &[cx(0.0, 0.0), cx(0.0, 1.0), cx(0.0, -1.0), cx(0.0, 0.0)]);
        let ev = hermitian_eigenvalues(&h);
        assert!((ev[0] + 1.0).abs() < 1e-14 && (ev[1] - 1.0).abs() < 1e-14);
    }
}
