//! One-level and two-level Hankel lifts, their adjoints and the
//! anti-diagonal multiplicities.
//!
//! Documentation uses 1-based indices: `H(x)[j,k] = x[j+k-1]`. The code is
//! 0-based throughout, so the same relation reads `m[(j, k)] = x[j + k]`.
//! File formats (see [`crate::io`]) are 1-based.

use nalgebra::{Complex, DMatrix};

use crate::error::{Error, Result};
use crate::scalar::{c_zero, CMatrix, CVector, Real};

/// Dimensions `n1 × n2` of a Hankel matrix built from a vector of length
/// `n = n1 + n2 - 1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
pub struct HankelShape {
    n1: usize,
    n2: usize,
}

impl HankelShape {
    pub fn new(n1: usize, n2: usize) -> Result<Self> {
        if n1 == 0 || n2 == 0 {
            return Err(Error::InvalidArgument(format!(
                "Hankel shape must be positive, got {n1}x{n2}"
            )));
        }
        Ok(Self { n1, n2 })
    }

    /// Default lift for a vector of length `n`: square `(n+1)/2` for odd
    /// `n`, otherwise `(n/2 + 1) × n/2`.
    pub fn for_length(n: usize) -> Result<Self> {
        match n {
            0 => Err(Error::InvalidArgument("vector length must be positive".into())),
            1 => Self::new(1, 1),
            n if n % 2 == 1 => Self::new(n.div_ceil(2), n.div_ceil(2)),
            n => Self::new(n / 2 + 1, n / 2),
        }
    }

    /// Square lift required by the incoherence and certificate diagnostics.
    pub fn square_for_length(n: usize) -> Result<Self> {
        if n.is_multiple_of(2) {
            return Err(Error::Domain(format!(
                "square Hankel lift needs an odd signal length, got {n}"
            )));
        }
        Self::for_length(n)
    }

    pub fn n1(&self) -> usize {
        self.n1
    }

    pub fn n2(&self) -> usize {
        self.n2
    }

    /// Length of the underlying vector.
    pub fn len(&self) -> usize {
        self.n1 + self.n2 - 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn is_square(&self) -> bool {
        self.n1 == self.n2
    }

    /// Errors unless `len = n1 + n2 − 1`.
    pub fn check_len(&self, context: &'static str, len: usize) -> Result<()> {
        if len != self.len() {
            return Err(Error::dim(context, self.len(), len));
        }
        Ok(())
    }

    pub(crate) fn check_matrix<T: Real>(&self, context: &'static str, m: &CMatrix<T>) -> Result<()> {
        if m.shape() != (self.n1, self.n2) {
            return Err(Error::dim(
                context,
                format!("{}x{}", self.n1, self.n2),
                format!("{}x{}", m.nrows(), m.ncols()),
            ));
        }
        Ok(())
    }
}

/// Anti-diagonal multiplicities `w_a`: the number of positions of an
/// `n1 × n2` matrix lying on anti-diagonal `a`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WeightVector(Vec<usize>);

impl WeightVector {
    pub fn as_slice(&self) -> &[usize] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn get(&self, a: usize) -> usize {
        self.0[a]
    }

    pub fn total(&self) -> usize {
        self.0.iter().sum()
    }

    /// `√w_a` for each anti-diagonal (the diagonal of `D`).
    pub fn sqrt<T: Real>(&self) -> Vec<T> {
        self.0.iter().map(|&w| T::from_count(w).sqrt()).collect()
    }

    pub fn to_real<T: Real>(&self) -> Vec<T> {
        self.0.iter().map(|&w| T::from_count(w)).collect()
    }
}

impl std::ops::Index<usize> for WeightVector {
    type Output = usize;
    fn index(&self, a: usize) -> &usize {
        &self.0[a]
    }
}

/// Computes `w_a` in closed form: `min(a+1, n1, n2, n-a)` for 0-based `a`.
pub fn antidiag_weights(shape: HankelShape) -> WeightVector {
    let n = shape.len();
    let cap = shape.n1.min(shape.n2);
    WeightVector((0..n).map(|a| (a + 1).min(n - a).min(cap)).collect())
}

/// `H(x)`: the `n1 × n2` Hankel matrix with `m[(j, k)] = x[j + k]`.
pub fn hankel_lift<T: Real>(x: &[Complex<T>], shape: HankelShape) -> Result<CMatrix<T>> {
    shape.check_len("hankel_lift", x.len())?;
    Ok(DMatrix::from_fn(shape.n1, shape.n2, |j, k| x[j + k]))
}

/// `H*(M)`: sums of `M` along each anti-diagonal.
pub fn hankel_adjoint<T: Real>(m: &CMatrix<T>, shape: HankelShape) -> Result<CVector<T>> {
    shape.check_matrix("hankel_adjoint", m)?;
    let mut y = CVector::from_element(shape.len(), c_zero());
    for k in 0..shape.n2 {
        for j in 0..shape.n1 {
            y[j + k] += m[(j, k)];
        }
    }
    Ok(y)
}

/// `G(x) = H(D⁻¹x)`, the isometric Hankel lift.
pub fn g_lift<T: Real>(x: &[Complex<T>], shape: HankelShape) -> Result<CMatrix<T>> {
    shape.check_len("g_lift", x.len())?;
    let root_w = antidiag_weights(shape).sqrt::<T>();
    let scaled: Vec<Complex<T>> = x.iter().zip(&root_w).map(|(z, s)| z.unscale(*s)).collect();
    hankel_lift(&scaled, shape)
}

/// `G*(M) = D⁻¹ H*(M)`.
pub fn g_adjoint<T: Real>(m: &CMatrix<T>, shape: HankelShape) -> Result<CVector<T>> {
    let mut y = hankel_adjoint(m, shape)?;
    for (z, s) in y.iter_mut().zip(antidiag_weights(shape).sqrt::<T>()) {
        *z = z.unscale(s);
    }
    Ok(y)
}

/// Basis element `G_k = H(e_k)/√w_k` (0-based `k`).
pub fn g_basis<T: Real>(k: usize, shape: HankelShape) -> Result<CMatrix<T>> {
    if k >= shape.len() {
        return Err(Error::InvalidArgument(format!(
            "basis index {k} out of range for length {}",
            shape.len()
        )));
    }
    let mut e = vec![c_zero(); shape.len()];
    e[k] = Complex::new(T::one(), T::zero());
    g_lift(&e, shape)
}

/// Level dimensions of a two-level (block Hankel of Hankel) lift of an
/// `n × s` slice, with `n = l1 + k1 - 1` and `s = l2 + k2 - 1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
pub struct TwoLevelShape {
    outer: HankelShape,
    inner: HankelShape,
}

impl TwoLevelShape {
    pub fn new(l1: usize, k1: usize, l2: usize, k2: usize) -> Result<Self> {
        Ok(Self {
            outer: HankelShape::new(l1, k1)?,
            inner: HankelShape::new(l2, k2)?,
        })
    }

    /// Default two-level shape for an `n × s` slice.
    pub fn for_dims(n: usize, s: usize) -> Result<Self> {
        Ok(Self {
            outer: HankelShape::for_length(n)?,
            inner: HankelShape::for_length(s)?,
        })
    }

    /// Level-1 shape `(L1, K1)`; indexes the blocks.
    pub fn outer(&self) -> HankelShape {
        self.outer
    }

    /// Level-2 shape `(L2, K2)`; shape of each block.
    pub fn inner(&self) -> HankelShape {
        self.inner
    }

    /// Slice dimensions `(n, s)`.
    pub fn slice_dims(&self) -> (usize, usize) {
        (self.outer.len(), self.inner.len())
    }

    /// Dimensions of the lifted matrix `(L1·L2) × (K1·K2)`.
    pub fn lifted_dims(&self) -> (usize, usize) {
        (
            self.outer.n1() * self.inner.n1(),
            self.outer.n2() * self.inner.n2(),
        )
    }

    fn check_slice<T: Real>(&self, context: &'static str, s: &CMatrix<T>) -> Result<()> {
        let dims = self.slice_dims();
        if s.shape() != dims {
            return Err(Error::dim(
                context,
                format!("{}x{}", dims.0, dims.1),
                format!("{}x{}", s.nrows(), s.ncols()),
            ));
        }
        Ok(())
    }
}

/// Two-level block Hankel lift: block `(p, q)` is `H(row p+q of S)` at the
/// inner shape, with level 1 as the outer block index.
pub fn two_level_lift<T: Real>(s: &CMatrix<T>, shape: TwoLevelShape) -> Result<CMatrix<T>> {
    shape.check_slice("two_level_lift", s)?;
    let (l2, k2) = (shape.inner.n1(), shape.inner.n2());
    let (rows, cols) = shape.lifted_dims();
    Ok(DMatrix::from_fn(rows, cols, |row, col| {
        let (p, j) = (row / l2, row % l2);
        let (q, k) = (col / k2, col % k2);
        s[(p + q, j + k)]
    }))
}

/// Adjoint of [`two_level_lift`]: accumulates every lifted entry back onto
/// the slice position it was copied from.
pub fn two_level_adjoint<T: Real>(m: &CMatrix<T>, shape: TwoLevelShape) -> Result<CMatrix<T>> {
    let dims = shape.lifted_dims();
    if m.shape() != dims {
        return Err(Error::dim(
            "two_level_adjoint",
            format!("{}x{}", dims.0, dims.1),
            format!("{}x{}", m.nrows(), m.ncols()),
        ));
    }
    let (l2, k2) = (shape.inner.n1(), shape.inner.n2());
    let (n, s) = shape.slice_dims();
    let mut out = CMatrix::from_element(n, s, c_zero());
    for col in 0..dims.1 {
        let (q, k) = (col / k2, col % k2);
        for row in 0..dims.0 {
            let (p, j) = (row / l2, row % l2);
            out[(p + q, j + k)] += m[(row, col)];
        }
    }
    Ok(out)
}

/// Multiplicity of each slice entry in the two-level lift:
/// `W[a, b] = w¹_a · w²_b`.
pub fn two_level_weights(shape: TwoLevelShape) -> DMatrix<usize> {
    let w1 = antidiag_weights(shape.outer);
    let w2 = antidiag_weights(shape.inner);
    DMatrix::from_fn(w1.len(), w2.len(), |a, b| w1[a] * w2[b])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::{fro, inner, inner_vec, spectral_norm};
    use nalgebra::Complex;

    fn c(re: f64) -> Complex<f64> {
        Complex::new(re, 0.0)
    }

    fn shape(n1: usize, n2: usize) -> HankelShape {
        HankelShape::new(n1, n2).unwrap()
    }

    #[test]
    fn lift_matches_display() {
        let x: Vec<_> = (1..=5).map(|v| c(v as f64)).collect();
        let m = hankel_lift(&x, shape(3, 3)).unwrap();
        let expected = [[1., 2., 3.], [2., 3., 4.], [3., 4., 5.]];
        for j in 0..3 {
            for k in 0..3 {
                assert_eq!(m[(j, k)], c(expected[j][k]));
            }
        }
        let one = hankel_lift(&[c(7.0)], shape(1, 1)).unwrap();
        assert_eq!(one[(0, 0)], c(7.0));
    }

    #[test]
    fn lift_of_unit_vector_is_antidiagonal() {
        let mut x = vec![c(0.0); 5];
        x[2] = c(1.0);
        let m = hankel_lift(&x, shape(3, 3)).unwrap();
        for j in 0..3 {
            for k in 0..3 {
                let expect = if j + k == 2 { 1.0 } else { 0.0 };
                assert_eq!(m[(j, k)], c(expect));
            }
        }
    }

    #[test]
    fn lift_rejects_wrong_length() {
        let x = vec![c(1.0); 4];
        assert!(matches!(
            hankel_lift(&x, shape(3, 3)),
            Err(Error::Dimension { .. })
        ));
        let m = CMatrix::<f64>::zeros(2, 3);
        assert!(hankel_adjoint(&m, shape(3, 3)).is_err());
    }

    #[test]
    fn adjoint_examples() {
        let ones = CMatrix::<f64>::from_element(3, 3, c(1.0));
        let y = hankel_adjoint(&ones, shape(3, 3)).unwrap();
        assert_eq!(y.as_slice(), &[c(1.), c(2.), c(3.), c(2.), c(1.)]);

        let eye = CMatrix::<f64>::identity(3, 3);
        let y = hankel_adjoint(&eye, shape(3, 3)).unwrap();
        assert_eq!(y.as_slice(), &[c(1.), c(0.), c(1.), c(0.), c(1.)]);

        let lifted = hankel_lift(&[c(1.0); 5], shape(3, 3)).unwrap();
        let y = hankel_adjoint(&lifted, shape(3, 3)).unwrap();
        assert_eq!(y.as_slice(), &[c(1.), c(2.), c(3.), c(2.), c(1.)]);
    }

    #[test]
    fn weight_examples() {
        assert_eq!(antidiag_weights(shape(3, 3)).as_slice(), &[1, 2, 3, 2, 1]);
        assert_eq!(antidiag_weights(shape(1, 5)).as_slice(), &[1, 1, 1, 1, 1]);
        assert_eq!(antidiag_weights(shape(2, 4)).as_slice(), &[1, 2, 2, 2, 1]);
    }

    #[test]
    fn weights_match_brute_force_count() {
        for n1 in 1..7 {
            for n2 in 1..7 {
                let sh = shape(n1, n2);
                let mut counts = vec![0usize; sh.len()];
                for j in 0..n1 {
                    for k in 0..n2 {
                        counts[j + k] += 1;
                    }
                }
                let w = antidiag_weights(sh);
                assert_eq!(w.as_slice(), counts.as_slice());
                assert_eq!(w.total(), n1 * n2);
                assert_eq!(*w.as_slice().iter().max().unwrap(), n1.min(n2));
            }
        }
    }

    #[test]
    fn g_basis_is_orthonormal_with_known_spectral_norm() {
        let sh = shape(3, 3);
        let basis: Vec<_> = (0..5).map(|k| g_basis::<f64>(k, sh).unwrap()).collect();
        for j in 0..5 {
            for k in 0..5 {
                let ip = inner(&basis[j], &basis[k]);
                let expect = if j == k { 1.0 } else { 0.0 };
                assert!((ip - c(expect)).norm() < 1e-14);
            }
        }
        let norm = spectral_norm(&basis[2]);
        assert!((norm - 1.0 / 3f64.sqrt()).abs() < 1e-14);
        assert!(g_basis::<f64>(5, sh).is_err());
    }

    #[test]
    fn g_adjoint_inverts_g_lift() {
        let sh = shape(3, 3);
        let x: Vec<_> = (0..5)
            .map(|i| Complex::new(i as f64 * 0.3 - 1.0, (i * i) as f64 * 0.1))
            .collect();
        let back = g_adjoint(&g_lift(&x, sh).unwrap(), sh).unwrap();
        for (a, b) in back.iter().zip(&x) {
            assert!((a - b).norm() < 1e-12);
        }
        let gk = g_basis::<f64>(3, sh).unwrap();
        let ek = g_adjoint(&gk, sh).unwrap();
        for (i, z) in ek.iter().enumerate() {
            let expect = if i == 3 { 1.0 } else { 0.0 };
            assert!((z - c(expect)).norm() < 1e-14);
        }
        let zero = g_adjoint(&CMatrix::<f64>::zeros(3, 3), sh).unwrap();
        assert!(zero.iter().all(|z| z.norm() == 0.0));
    }

    #[test]
    fn adjointness_on_rectangular_shape() {
        let sh = shape(2, 4);
        let x: Vec<_> = (0..5).map(|i| Complex::new(1.0 + i as f64, -0.5 * i as f64)).collect();
        let m = CMatrix::<f64>::from_fn(2, 4, |j, k| Complex::new((j * 4 + k) as f64, 1.0 - k as f64));
        let lhs = inner(&hankel_lift(&x, sh).unwrap(), &m);
        let rhs = inner_vec(&x, hankel_adjoint(&m, sh).unwrap().as_slice());
        assert!((lhs - rhs).norm() < 1e-12 * lhs.norm().max(1.0));
    }

    #[test]
    fn default_shapes() {
        assert_eq!(HankelShape::for_length(47).unwrap(), shape(24, 24));
        assert_eq!(HankelShape::for_length(6).unwrap(), shape(4, 3));
        assert_eq!(HankelShape::for_length(1).unwrap(), shape(1, 1));
        assert!(HankelShape::square_for_length(6).is_err());
        assert!(HankelShape::new(0, 3).is_err());
    }

    #[test]
    fn two_level_degenerate_levels_give_a_row() {
        let sh = TwoLevelShape::new(1, 3, 1, 2).unwrap();
        let s = CMatrix::<f64>::from_fn(3, 2, |a, b| c((a * 2 + b) as f64));
        let m = two_level_lift(&s, sh).unwrap();
        assert_eq!(m.shape(), (1, 6));
        for col in 0..6 {
            assert_eq!(m[(0, col)], c(col as f64));
        }
    }

    #[test]
    fn two_level_block_is_hankel_of_row() {
        let sh = TwoLevelShape::new(2, 2, 2, 2).unwrap();
        let s = CMatrix::<f64>::from_fn(3, 3, |a, b| Complex::new(a as f64, b as f64));
        let m = two_level_lift(&s, sh).unwrap();
        // block (2,1) in 1-based terms: rows 2..4, cols 0..2
        let row: Vec<_> = s.row(1).iter().copied().collect();
        let expect = hankel_lift(&row, sh.inner()).unwrap();
        assert_eq!(m.view((2, 0), (2, 2)).clone_owned(), expect);
    }

    #[test]
    fn two_level_weights_match_brute_force() {
        let sh = TwoLevelShape::new(2, 2, 2, 2).unwrap();
        let w = two_level_weights(sh);
        let expected = [[1, 2, 1], [2, 4, 2], [1, 2, 1]];
        for a in 0..3 {
            for b in 0..3 {
                assert_eq!(w[(a, b)], expected[a][b]);
            }
        }
        for (l1, k1, l2, k2) in [(2, 3, 3, 1), (3, 3, 2, 4), (1, 4, 2, 2)] {
            let sh = TwoLevelShape::new(l1, k1, l2, k2).unwrap();
            let (n, s) = sh.slice_dims();
            let mut counts = DMatrix::<usize>::zeros(n, s);
            for p in 0..l1 {
                for q in 0..k1 {
                    for j in 0..l2 {
                        for k in 0..k2 {
                            counts[(p + q, j + k)] += 1;
                        }
                    }
                }
            }
            assert_eq!(two_level_weights(sh), counts);
            let ones = CMatrix::<f64>::from_element(n, s, c(1.0));
            let back = two_level_adjoint(&two_level_lift(&ones, sh).unwrap(), sh).unwrap();
            for a in 0..n {
                for b in 0..s {
                    assert_eq!(back[(a, b)], c(counts[(a, b)] as f64));
                }
            }
        }
    }

    #[test]
    fn two_level_adjointness() {
        let sh = TwoLevelShape::new(3, 2, 2, 3).unwrap();
        let (n, s) = sh.slice_dims();
        let (r, c_) = sh.lifted_dims();
        let x = CMatrix::<f64>::from_fn(n, s, |a, b| Complex::new((a as f64).sin(), (b as f64 + 0.5).cos()));
        let m = CMatrix::<f64>::from_fn(r, c_, |a, b| Complex::new((a * b) as f64 * 0.1, a as f64 - b as f64));
        let lhs = inner(&two_level_lift(&x, sh).unwrap(), &m);
        let rhs = inner(&x, &two_level_adjoint(&m, sh).unwrap());
        assert!((lhs - rhs).norm() <= 1e-12 * fro(&m) * fro(&x));
    }
}
