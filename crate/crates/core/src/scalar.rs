//! Scalar abstraction shared by every numerical routine in the crate.
//!
//! All operators are written against [`Real`], which is implemented for
//! `f32` and `f64`. Complex entries are `Complex<T>` from `num-complex`
//! (re-exported through nalgebra).

use std::fmt::{Debug, Display};

use nalgebra::{Complex, DMatrix, DVector, RealField};
use num_traits::{FromPrimitive, ToPrimitive};

/// Real floating-point scalar usable as the base field of the complex
/// matrices handled here.
pub trait Real:
    RealField + Copy + FromPrimitive + ToPrimitive + Debug + Display + Send + Sync + 'static
{
    /// Lossy conversion from an `f64` literal.
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("f64 literal representable")
    }

    /// Lossy conversion to `f64`, used for reporting.
    fn as_f64(self) -> f64 {
        self.to_f64().expect("finite scalar converts to f64")
    }

    /// Conversion from a count or index.
    fn from_count(n: usize) -> Self {
        Self::from_usize(n).expect("count representable")
    }
}

impl Real for f32 {}
impl Real for f64 {}

/// Dense complex matrix.
pub type CMatrix<T> = DMatrix<Complex<T>>;
/// Dense complex column vector.
pub type CVector<T> = DVector<Complex<T>>;

/// `Complex::new(re, 0)`.
#[inline]
pub fn c_real<T: Real>(re: T) -> Complex<T> {
    Complex::new(re, T::zero())
}

#[inline]
pub fn c_zero<T: Real>() -> Complex<T> {
    Complex::new(T::zero(), T::zero())
}

/// `exp(i·theta)`.
#[inline]
pub fn cis<T: Real>(theta: T) -> Complex<T> {
    Complex::new(theta.cos(), theta.sin())
}

/// Squared modulus.
#[inline]
pub fn norm_sqr<T: Real>(z: Complex<T>) -> T {
    z.re * z.re + z.im * z.im
}

/// Frobenius inner product `⟨A, B⟩ = Σ conj(a_ij)·b_ij`.
pub fn inner<T: Real>(a: &CMatrix<T>, b: &CMatrix<T>) -> Complex<T> {
    debug_assert_eq!(a.shape(), b.shape());
    a.iter()
        .zip(b.iter())
        .fold(c_zero(), |acc, (x, y)| acc + x.conj() * y)
}

/// Frobenius inner product of two vectors with the same convention as [`inner`].
pub fn inner_vec<T: Real>(a: &[Complex<T>], b: &[Complex<T>]) -> Complex<T> {
    debug_assert_eq!(a.len(), b.len());
    a.iter()
        .zip(b.iter())
        .fold(c_zero(), |acc, (x, y)| acc + x.conj() * y)
}

/// Squared Frobenius norm.
pub fn fro_sqr<T: Real>(a: &CMatrix<T>) -> T {
    a.iter().fold(T::zero(), |acc, z| acc + norm_sqr(*z))
}

/// Frobenius norm.
pub fn fro<T: Real>(a: &CMatrix<T>) -> T {
    fro_sqr(a).sqrt()
}

/// True when every entry has finite real and imaginary parts.
pub fn all_finite<T: Real>(a: &CMatrix<T>) -> bool {
    a.iter().all(|z| z.re.is_finite() && z.im.is_finite())
}

/// Converts every entry between scalar precisions.
pub fn convert_matrix<S: Real, T: Real>(a: &CMatrix<S>) -> CMatrix<T> {
    a.map(|z| Complex::new(T::lit(z.re.as_f64()), T::lit(z.im.as_f64())))
}

/// Spectral norm (largest singular value); zero for empty matrices.
pub fn spectral_norm<T: Real>(a: &CMatrix<T>) -> T {
    if a.is_empty() {
        return T::zero();
    }
    a.clone()
        .singular_values()
        .iter()
        .fold(T::zero(), |m, &s| if s > m { s } else { m })
}

/// Singular values sorted in non-increasing order.
pub fn sorted_singular_values<T: Real>(a: &CMatrix<T>) -> Vec<T> {
    let mut s: Vec<T> = a.clone().singular_values().iter().copied().collect();
    s.sort_by(|x, y| y.partial_cmp(x).unwrap_or(std::cmp::Ordering::Equal));
    s
}

/// `σ_{r+1}/σ_1`, or zero when the matrix has at most `r` singular values
/// or is identically zero.
pub fn tail_ratio<T: Real>(a: &CMatrix<T>, r: usize) -> T {
    let s = sorted_singular_values(a);
    if s.len() <= r || s[0] == T::zero() {
        return T::zero();
    }
    s[r] / s[0]
}

/// `A·B` by plain column-major loops. nalgebra's generic product is several
/// times slower for complex entries at the sizes used here.
pub fn matmul<T: Real>(a: &CMatrix<T>, b: &CMatrix<T>) -> CMatrix<T> {
    assert_eq!(a.ncols(), b.nrows(), "matmul: inner dimensions differ");
    let (m, k) = a.shape();
    let n = b.ncols();
    let mut out = vec![c_zero::<T>(); m * n];
    let a = a.as_slice();
    for (j, col) in out.chunks_exact_mut(m).enumerate() {
        for p in 0..k {
            let s = b[(p, j)];
            if s.re == T::zero() && s.im == T::zero() {
                continue;
            }
            for (c, &x) in col.iter_mut().zip(&a[p * m..(p + 1) * m]) {
                c.re += x.re * s.re - x.im * s.im;
                c.im += x.re * s.im + x.im * s.re;
            }
        }
    }
    CMatrix::from_vec(m, n, out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn matmul_matches_nalgebra() {
        let a = CMatrix::<f64>::from_fn(5, 3, |i, k| Complex::new((i * 3 + k) as f64 * 0.3, (i as f64 - k as f64).sin()));
        let b = CMatrix::<f64>::from_fn(3, 4, |i, k| Complex::new((i + 2 * k) as f64, 0.5 - (i * k) as f64));
        assert!(fro(&(matmul(&a, &b) - &a * &b)) < 1e-12);
        assert_eq!(matmul(&a, &CMatrix::zeros(3, 0)).shape(), (5, 0));
    }
}
