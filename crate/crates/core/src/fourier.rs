//! Unitary DFT, block-diagonal matrices and the Fourier-domain block lift
//! `Ĝ`, which sends a `d × n` matrix `X` to the block-diagonal matrix whose
//! `i`-th block is `G(row i of F·X)`.

use std::ops::{Add, Sub};

use nalgebra::{Complex, DMatrix};
use crate::error::{Error, Result};
use crate::hankel::{antidiag_weights, hankel_lift, HankelShape};
use crate::scalar::{c_zero, cis, fro_sqr, inner, CMatrix, Real};

/// `F[j,k] = exp(-2πi·j·k/d)/√d` (0-based), so that `F·1 = √d·e₁`.
pub fn unitary_dft<T: Real>(d: usize) -> CMatrix<T> {
    assert!(d >= 1, "DFT size must be positive");
    let scale = T::from_count(d).sqrt().recip();
    let two_pi = T::two_pi();
    DMatrix::from_fn(d, d, |j, k| {
        let phase = -two_pi * T::from_count((j * k) % d) / T::from_count(d);
        cis(phase).scale(scale)
    })
}

/// A list of `d` equally shaped `n1 × n2` blocks standing for the
/// `d·n1 × d·n2` block-diagonal matrix they form.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockDiagonal<T: Real> {
    blocks: Vec<CMatrix<T>>,
    shape: HankelShape,
}

impl<T: Real> BlockDiagonal<T> {
    pub fn zeros(d: usize, shape: HankelShape) -> Self {
        Self {
            blocks: vec![CMatrix::zeros(shape.n1(), shape.n2()); d],
            shape,
        }
    }

    pub fn from_blocks(blocks: Vec<CMatrix<T>>, shape: HankelShape) -> Result<Self> {
        if blocks.is_empty() {
            return Err(Error::InvalidArgument("block-diagonal needs at least one block".into()));
        }
        for b in &blocks {
            shape.check_matrix("BlockDiagonal::from_blocks", b)?;
        }
        Ok(Self { blocks, shape })
    }

    pub fn d(&self) -> usize {
        self.blocks.len()
    }

    pub fn shape(&self) -> HankelShape {
        self.shape
    }

    pub fn blocks(&self) -> &[CMatrix<T>] {
        &self.blocks
    }

    pub fn blocks_mut(&mut self) -> &mut [CMatrix<T>] {
        &mut self.blocks
    }

    pub fn block(&self, i: usize) -> &CMatrix<T> {
        &self.blocks[i]
    }

    pub fn into_blocks(self) -> Vec<CMatrix<T>> {
        self.blocks
    }

    /// `⟨self, other⟩ = Σ_i ⟨self_i, other_i⟩`.
    pub fn inner(&self, other: &Self) -> Complex<T> {
        self.blocks
            .iter()
            .zip(&other.blocks)
            .fold(c_zero(), |acc, (a, b)| acc + inner(a, b))
    }

    pub fn fro_sqr(&self) -> T {
        self.blocks.iter().fold(T::zero(), |acc, b| acc + fro_sqr(b))
    }

    pub fn fro(&self) -> T {
        self.fro_sqr().sqrt()
    }

    /// Spectral norm of the whole block-diagonal matrix, i.e. the largest
    /// block spectral norm.
    pub fn spectral_norm(&self) -> T {
        self.blocks
            .iter()
            .map(crate::scalar::spectral_norm)
            .fold(T::zero(), |m, s| if s > m { s } else { m })
    }

    pub fn scale(&self, alpha: T) -> Self {
        self.map(|b| b.map(|z| z.scale(alpha)))
    }

    /// `self += alpha · other`.
    pub fn axpy(&mut self, alpha: T, other: &Self) {
        for (a, b) in self.blocks.iter_mut().zip(&other.blocks) {
            a.zip_apply(b, |x, y| *x += y.scale(alpha));
        }
    }

    pub fn map(&self, f: impl FnMut(&CMatrix<T>) -> CMatrix<T>) -> Self {
        Self {
            blocks: self.blocks.iter().map(f).collect(),
            shape: self.shape,
        }
    }

    pub(crate) fn check_same(&self, context: &'static str, other: &Self) -> Result<()> {
        if self.shape != other.shape || self.d() != other.d() {
            return Err(Error::dim(
                context,
                format!("{} blocks of {}x{}", self.d(), self.shape.n1(), self.shape.n2()),
                format!("{} blocks of {}x{}", other.d(), other.shape.n1(), other.shape.n2()),
            ));
        }
        Ok(())
    }
}

impl<'a, T: Real> Add<&'a BlockDiagonal<T>> for &'a BlockDiagonal<T> {
    type Output = BlockDiagonal<T>;
    fn add(self, rhs: &'a BlockDiagonal<T>) -> BlockDiagonal<T> {
        BlockDiagonal {
            blocks: self.blocks.iter().zip(&rhs.blocks).map(|(a, b)| a + b).collect(),
            shape: self.shape,
        }
    }
}

impl<'a, T: Real> Sub<&'a BlockDiagonal<T>> for &'a BlockDiagonal<T> {
    type Output = BlockDiagonal<T>;
    fn sub(self, rhs: &'a BlockDiagonal<T>) -> BlockDiagonal<T> {
        BlockDiagonal {
            blocks: self.blocks.iter().zip(&rhs.blocks).map(|(a, b)| a - b).collect(),
            shape: self.shape,
        }
    }
}

/// Precomputed `Ĝ` for a fixed `(d, n1, n2)`: holds `F`, `F⁻¹ = Fᴴ` and
/// the anti-diagonal weights, so repeated applications skip the setup.
#[derive(Debug, Clone)]
pub struct FourierLift<T: Real> {
    d: usize,
    shape: HankelShape,
    forward: CMatrix<T>,
    inverse: CMatrix<T>,
    weights: Vec<usize>,
    root_w: Vec<T>,
}

impl<T: Real> FourierLift<T> {
    pub fn new(d: usize, shape: HankelShape) -> Result<Self> {
        if d == 0 {
            return Err(Error::InvalidArgument("block count d must be positive".into()));
        }
        let forward = unitary_dft::<T>(d);
        let inverse = forward.adjoint();
        let w = antidiag_weights(shape);
        Ok(Self {
            d,
            shape,
            forward,
            inverse,
            root_w: w.sqrt(),
            weights: w.as_slice().to_vec(),
        })
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn n(&self) -> usize {
        self.shape.len()
    }

    pub fn shape(&self) -> HankelShape {
        self.shape
    }

    pub fn dft(&self) -> &CMatrix<T> {
        &self.forward
    }

    pub fn idft(&self) -> &CMatrix<T> {
        &self.inverse
    }

    pub fn weights(&self) -> &[usize] {
        &self.weights
    }

    pub fn root_weights(&self) -> &[T] {
        &self.root_w
    }

    fn check_input(&self, context: &'static str, x: &CMatrix<T>) -> Result<()> {
        if x.shape() != (self.d, self.n()) {
            return Err(Error::dim(
                context,
                format!("{}x{}", self.d, self.n()),
                format!("{}x{}", x.nrows(), x.ncols()),
            ));
        }
        Ok(())
    }

    fn check_blocks(&self, context: &'static str, z: &BlockDiagonal<T>) -> Result<()> {
        if z.shape() != self.shape || z.d() != self.d {
            return Err(Error::dim(
                context,
                format!("{} blocks of {}x{}", self.d, self.shape.n1(), self.shape.n2()),
                format!("{} blocks of {}x{}", z.d(), z.shape().n1(), z.shape().n2()),
            ));
        }
        Ok(())
    }

    fn lift_rows(&self, xhat: &CMatrix<T>, scale: impl Fn(usize) -> T) -> BlockDiagonal<T> {
        let blocks = (0..self.d)
            .map(|i| {
                let row: Vec<Complex<T>> = (0..self.n()).map(|k| xhat[(i, k)].scale(scale(k))).collect();
                hankel_lift(&row, self.shape).expect("row length matches shape")
            })
            .collect();
        BlockDiagonal {
            blocks,
            shape: self.shape,
        }
    }

    /// `Ĝ(X)`: block `i` is `G(row i of F·X)`.
    pub fn lift(&self, x: &CMatrix<T>) -> Result<BlockDiagonal<T>> {
        self.check_input("ghat_lift", x)?;
        let xhat = &self.forward * x;
        Ok(self.lift_rows(&xhat, |k| self.root_w[k].recip()))
    }

    /// Unnormalized lift `Ẑ`: block `i` is `H(row i of F·X)`.
    pub fn hankel_blocks(&self, x: &CMatrix<T>) -> Result<BlockDiagonal<T>> {
        self.check_input("hankel_blockdiag", x)?;
        let xhat = &self.forward * x;
        Ok(self.lift_rows(&xhat, |_| T::one()))
    }

    /// Row `i` of the result is `G*(Z_i)`, before the inverse DFT.
    pub fn adjoint_rows(&self, z: &BlockDiagonal<T>) -> Result<CMatrix<T>> {
        self.check_blocks("ghat_adjoint", z)?;
        let n = self.n();
        let mut y = CMatrix::from_element(self.d, n, c_zero());
        for (i, b) in z.blocks().iter().enumerate() {
            for k in 0..self.shape.n2() {
                for j in 0..self.shape.n1() {
                    y[(i, j + k)] += b[(j, k)];
                }
            }
            for a in 0..n {
                y[(i, a)] = y[(i, a)].unscale(self.root_w[a]);
            }
        }
        Ok(y)
    }

    /// `Ĝ*(Z) = F⁻¹ · [G*(Z_1); …; G*(Z_d)]`.
    pub fn adjoint(&self, z: &BlockDiagonal<T>) -> Result<CMatrix<T>> {
        Ok(&self.inverse * self.adjoint_rows(z)?)
    }

    /// `ĜĜ*(Z)`: orthogonal projection onto block-diagonal matrices with
    /// Hankel blocks.
    pub fn project_hankel(&self, z: &BlockDiagonal<T>) -> Result<BlockDiagonal<T>> {
        let rows = self.adjoint_rows(z)?;
        Ok(self.lift_rows(&rows, |k| self.root_w[k].recip()))
    }

    /// `Ĝ_{j,k} = Ĝ(e_j e_kᵀ)` (0-based indices).
    pub fn basis(&self, j: usize, k: usize) -> Result<BlockDiagonal<T>> {
        if j >= self.d || k >= self.n() {
            return Err(Error::InvalidArgument(format!(
                "basis index ({j}, {k}) out of range for {}x{}",
                self.d,
                self.n()
            )));
        }
        let mut e = CMatrix::zeros(self.d, self.n());
        e[(j, k)] = Complex::new(T::one(), T::zero());
        self.lift(&e)
    }
}

/// `Ĝ(X)` for a `d × n` matrix.
pub fn ghat_lift<T: Real>(x: &CMatrix<T>, shape: HankelShape) -> Result<BlockDiagonal<T>> {
    FourierLift::new(x.nrows(), shape)?.lift(x)
}

/// `Ẑ = diag(H(e_iᵀ F X))`.
pub fn hankel_blockdiag<T: Real>(x: &CMatrix<T>, shape: HankelShape) -> Result<BlockDiagonal<T>> {
    FourierLift::new(x.nrows(), shape)?.hankel_blocks(x)
}

/// `Ĝ*(Z)`.
pub fn ghat_adjoint<T: Real>(z: &BlockDiagonal<T>) -> Result<CMatrix<T>> {
    FourierLift::new(z.d(), z.shape())?.adjoint(z)
}

/// `Ĝ_{j,k}` with 0-based `(j, k)`.
pub fn ghat_basis<T: Real>(j: usize, k: usize, d: usize, shape: HankelShape) -> Result<BlockDiagonal<T>> {
    FourierLift::new(d, shape)?.basis(j, k)
}

/// Dense complex array of shape `n × s × d`, stored as `d` frontal slices
/// of size `n × s`. The third index runs along the tubes.
#[derive(Debug, Clone, PartialEq)]
pub struct Array3<T: Real> {
    slices: Vec<CMatrix<T>>,
    n: usize,
    s: usize,
}

impl<T: Real> Array3<T> {
    pub fn zeros(n: usize, s: usize, d: usize) -> Self {
        Self {
            slices: vec![CMatrix::zeros(n, s); d],
            n,
            s,
        }
    }

    pub fn from_slices(slices: Vec<CMatrix<T>>) -> Result<Self> {
        let Some(first) = slices.first() else {
            return Err(Error::InvalidArgument("3D array needs at least one slice".into()));
        };
        let (n, s) = first.shape();
        if n == 0 || s == 0 {
            return Err(Error::InvalidArgument("3D array dimensions must be positive".into()));
        }
        for m in &slices {
            if m.shape() != (n, s) {
                return Err(Error::dim(
                    "Array3::from_slices",
                    format!("{n}x{s}"),
                    format!("{}x{}", m.nrows(), m.ncols()),
                ));
            }
        }
        Ok(Self { slices, n, s })
    }

    /// `(n, s, d)`.
    pub fn dims(&self) -> (usize, usize, usize) {
        (self.n, self.s, self.slices.len())
    }

    pub fn slices(&self) -> &[CMatrix<T>] {
        &self.slices
    }

    pub fn slices_mut(&mut self) -> &mut [CMatrix<T>] {
        &mut self.slices
    }

    pub fn slice(&self, l: usize) -> &CMatrix<T> {
        &self.slices[l]
    }

    pub fn get(&self, j: usize, k: usize, l: usize) -> Complex<T> {
        self.slices[l][(j, k)]
    }

    pub fn set(&mut self, j: usize, k: usize, l: usize, v: Complex<T>) {
        self.slices[l][(j, k)] = v;
    }

    pub fn fro_sqr(&self) -> T {
        self.slices.iter().fold(T::zero(), |acc, m| acc + fro_sqr(m))
    }

    pub fn fro(&self) -> T {
        self.fro_sqr().sqrt()
    }

    /// Flattens to a `d × (n·s)` matrix whose row `l` is slice `l` read
    /// row-major.
    pub fn to_tube_rows(&self) -> CMatrix<T> {
        let (n, s, d) = self.dims();
        DMatrix::from_fn(d, n * s, |l, idx| self.slices[l][(idx / s, idx % s)])
    }

    /// Inverse of [`Array3::to_tube_rows`].
    pub fn from_tube_rows(rows: &CMatrix<T>, n: usize, s: usize) -> Result<Self> {
        if rows.ncols() != n * s {
            return Err(Error::dim("Array3::from_tube_rows", n * s, rows.ncols()));
        }
        let slices = (0..rows.nrows())
            .map(|l| DMatrix::from_fn(n, s, |j, k| rows[(l, j * s + k)]))
            .collect();
        Self::from_slices(slices)
    }
}

fn mix_tubes<T: Real>(x: &Array3<T>, f: &CMatrix<T>) -> Array3<T> {
    let (n, s, _) = x.dims();
    let rows = f * x.to_tube_rows();
    Array3::from_tube_rows(&rows, n, s).expect("shape preserved")
}

/// Applies the unitary DFT along every tube: `X̂(j,k,:) = F·X(j,k,:)`.
pub fn tube_dft<T: Real>(x: &Array3<T>) -> Array3<T> {
    mix_tubes(x, &unitary_dft(x.dims().2))
}

/// Inverse of [`tube_dft`].
pub fn inverse_tube_dft<T: Real>(x: &Array3<T>) -> Array3<T> {
    mix_tubes(x, &unitary_dft(x.dims().2).adjoint())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hankel::{g_adjoint, g_basis, g_lift};
    use crate::scalar::{fro, spectral_norm};

    fn rand_matrix(rows: usize, cols: usize, salt: f64) -> CMatrix<f64> {
        DMatrix::from_fn(rows, cols, |i, j| {
            let t = (i * 31 + j * 17) as f64 + salt;
            Complex::new((t * 1.3).sin(), (t * 0.7 + 0.2).cos())
        })
    }

    #[test]
    fn dft_examples() {
        for d in 1..9 {
            let f = unitary_dft::<f64>(d);
            let eye = &f * f.adjoint();
            assert!((eye - CMatrix::<f64>::identity(d, d)).norm() < 1e-12);
            let ones = CMatrix::<f64>::from_element(d, 1, Complex::new(1.0, 0.0));
            let y = &f * ones;
            assert!((y[(0, 0)].re - (d as f64).sqrt()).abs() < 1e-12);
            assert!(y.iter().skip(1).all(|z| z.norm() < 1e-12));
        }
        let f = unitary_dft::<f64>(2);
        let h = 0.5f64.sqrt();
        let expect = [[h, h], [h, -h]];
        for j in 0..2 {
            for k in 0..2 {
                assert!((f[(j, k)] - Complex::new(expect[j][k], 0.0)).norm() < 1e-15);
            }
        }
    }

    #[test]
    fn lift_round_trip_and_zero() {
        let shape = HankelShape::new(3, 3).unwrap();
        let x = rand_matrix(4, 5, 0.3);
        let lift = FourierLift::new(4, shape).unwrap();
        let z = lift.lift(&x).unwrap();
        let back = lift.adjoint(&z).unwrap();
        assert!(fro(&(back - &x)) <= 1e-12 * fro(&x));
        assert!((z.fro() - fro(&x)).abs() < 1e-12);
        let zero = lift.lift(&CMatrix::zeros(4, 5)).unwrap();
        assert_eq!(zero.fro(), 0.0);
        assert_eq!(lift.adjoint(&BlockDiagonal::zeros(4, shape)).unwrap().norm(), 0.0);
    }

    #[test]
    fn basis_blocks_are_scaled_g_basis() {
        let shape = HankelShape::new(3, 3).unwrap();
        let lift = FourierLift::<f64>::new(3, shape).unwrap();
        let f = unitary_dft::<f64>(3);
        for j in 0..3 {
            for k in 0..5 {
                let gjk = lift.basis(j, k).unwrap();
                let gk = g_basis::<f64>(k, shape).unwrap();
                for i in 0..3 {
                    let expect = gk.map(|z| z * f[(i, j)]);
                    assert!(fro(&(gjk.block(i) - expect)) < 1e-14);
                }
            }
        }
    }

    #[test]
    fn basis_spectral_norm() {
        let shape = HankelShape::new(3, 3).unwrap();
        let g = ghat_basis::<f64>(0, 2, 2, shape).unwrap();
        assert!((g.spectral_norm() - 1.0 / 6f64.sqrt()).abs() < 1e-14);
        assert!(ghat_basis::<f64>(2, 0, 2, shape).is_err());
    }

    #[test]
    fn special_matrix_lift() {
        let d = 8;
        let n = 7;
        let shape = HankelShape::for_length(n).unwrap();
        let x = DMatrix::from_fn(d, n, |_, k| Complex::new(if k == 0 { 1.0 } else { 0.0 }, 0.0));
        let z = hankel_blockdiag(&x, shape).unwrap();
        let first = z.block(0);
        assert!((first[(0, 0)] - Complex::new((d as f64).sqrt(), 0.0)).norm() < 1e-12);
        let mut rest = fro(first).powi(2) - first[(0, 0)].norm_sqr();
        for b in &z.blocks()[1..] {
            rest += fro(b).powi(2);
        }
        assert!(rest < 1e-24);
    }

    #[test]
    fn hankel_blocks_are_fixed_by_g_projection() {
        let shape = HankelShape::new(3, 4).unwrap();
        let x = rand_matrix(3, 6, 1.1);
        let z = hankel_blockdiag(&x, shape).unwrap();
        for b in z.blocks() {
            let re = g_lift(g_adjoint(b, shape).unwrap().as_slice(), shape).unwrap();
            assert!(fro(&(re - b)) < 1e-12);
        }
        let lift = FourierLift::new(3, shape).unwrap();
        let projected = lift.project_hankel(&z).unwrap();
        assert!((&projected - &z).fro() < 1e-12);
    }

    #[test]
    fn single_block_reduces_to_hankel_lift() {
        let shape = HankelShape::new(2, 3).unwrap();
        let x = rand_matrix(1, 4, 2.0);
        let z = hankel_blockdiag(&x, shape).unwrap();
        let row: Vec<_> = x.row(0).iter().copied().collect();
        assert!(fro(&(z.block(0) - hankel_lift(&row, shape).unwrap())) < 1e-14);
    }

    #[test]
    fn adjoint_of_hankel_blocks_scales_columns() {
        let shape = HankelShape::new(3, 3).unwrap();
        let x = rand_matrix(4, 5, 0.9);
        let z = hankel_blockdiag(&x, shape).unwrap();
        let got = ghat_adjoint(&z).unwrap();
        let w = antidiag_weights(shape);
        for i in 0..4 {
            for k in 0..5 {
                let expect = x[(i, k)].scale((w[k] as f64).sqrt());
                assert!((got[(i, k)] - expect).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn dimension_errors() {
        let shape = HankelShape::new(3, 3).unwrap();
        assert!(ghat_lift(&CMatrix::<f64>::zeros(2, 4), shape).is_err());
        let lift = FourierLift::<f64>::new(2, shape).unwrap();
        assert!(lift.adjoint(&BlockDiagonal::zeros(3, shape)).is_err());
        assert!(BlockDiagonal::from_blocks(vec![CMatrix::<f64>::zeros(2, 3)], shape).is_err());
    }

    #[test]
    fn tube_dft_examples() {
        let ones = Array3::from_slices(vec![CMatrix::<f64>::from_element(2, 3, Complex::new(1.0, 0.0)); 4]).unwrap();
        let hat = tube_dft(&ones);
        for j in 0..2 {
            for k in 0..3 {
                assert!((hat.get(j, k, 0) - Complex::new(2.0, 0.0)).norm() < 1e-12);
                for l in 1..4 {
                    assert!(hat.get(j, k, l).norm() < 1e-12);
                }
            }
        }
        let x = Array3::from_slices((0..5).map(|l| rand_matrix(3, 2, l as f64)).collect()).unwrap();
        let back = inverse_tube_dft(&tube_dft(&x));
        for l in 0..5 {
            assert!(fro(&(back.slice(l) - x.slice(l))) < 1e-12);
        }
        let single = Array3::from_slices(vec![rand_matrix(2, 2, 0.0)]).unwrap();
        assert_eq!(tube_dft(&single), single);
    }

    #[test]
    fn spectral_norm_of_basis_is_exact() {
        let shape = HankelShape::new(4, 4).unwrap();
        let lift = FourierLift::<f64>::new(4, shape).unwrap();
        let w = antidiag_weights(shape);
        for k in 0..7 {
            let g = lift.basis(1, k).unwrap();
            let expect = 1.0 / ((4 * w[k]) as f64).sqrt();
            let got = g.blocks().iter().map(spectral_norm).fold(0.0, f64::max);
            assert!((got - expect).abs() < 1e-12);
        }
    }
}
