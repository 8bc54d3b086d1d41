#![allow(dead_code)]

use hankelmc::certificate::SampledDeviation;
use hankelmc::fourier::hankel_blockdiag;
use hankelmc::geometry::{block_svd, TangentSpace, DEFAULT_RANK_TOL};
use hankelmc::sampling::SamplingMask;
use hankelmc::signals::{gen_spectral_matrix, replace_rows};
use hankelmc::{BlockDiagonal, CMatrix, Complex, HankelShape};
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_matrix(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> CMatrix<f64> {
    DMatrix::from_fn(rows, cols, |_, _| Complex::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
}

pub fn random_blocks(rng: &mut ChaCha8Rng, d: usize, shape: HankelShape) -> BlockDiagonal<f64> {
    let blocks = (0..d).map(|_| random_matrix(rng, shape.n1(), shape.n2())).collect();
    BlockDiagonal::from_blocks(blocks, shape).unwrap()
}

pub fn random_vec(rng: &mut ChaCha8Rng, n: usize) -> Vec<Complex<f64>> {
    (0..n)
        .map(|_| Complex::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
        .collect()
}

/// Tangent space at the Fourier-domain Hankel lift of `x`.
pub fn tangent_of(x: &CMatrix<f64>, shape: HankelShape) -> TangentSpace<f64> {
    block_svd(&hankel_blockdiag(x, shape).unwrap(), DEFAULT_RANK_TOL).unwrap().0
}

pub fn spectral_tangent(d: usize, n: usize, r: usize, seed: u64) -> TangentSpace<f64> {
    let x = gen_spectral_matrix::<f64>(d, n, r, seed).unwrap().x;
    tangent_of(&x, HankelShape::for_length(n).unwrap())
}

pub fn adversarial_tangent(d: usize, n: usize, r: usize, seed: u64) -> TangentSpace<f64> {
    let inst = gen_spectral_matrix::<f64>(d, n, r, seed).unwrap();
    let (x, _, _) = replace_rows(&inst.xhat, 2, r, seed).unwrap();
    tangent_of(&x, HankelShape::for_length(n).unwrap())
}

/// Largest eigenvalue magnitude of the sampled-deviation map, from its
/// dense matrix in the standard basis of block-diagonal matrices, together
/// with `‖A − Aᴴ‖_F` for that matrix.
pub fn dense_deviation_norm(t: &TangentSpace<f64>, mask: &SamplingMask, p: f64) -> (f64, f64) {
    let op = SampledDeviation::new(t, mask, p).unwrap();
    let (d, shape) = (t.d(), t.shape());
    let (n1, n2) = (shape.n1(), shape.n2());
    let dim = d * n1 * n2;
    let flat = |z: &BlockDiagonal<f64>| -> Vec<Complex<f64>> {
        z.blocks().iter().flat_map(|b| b.iter().copied().collect::<Vec<_>>()).collect()
    };
    let mut dense = DMatrix::<Complex<f64>>::zeros(dim, dim);
    for col in 0..dim {
        let mut e = BlockDiagonal::zeros(d, shape);
        let (a, rest) = (col / (n1 * n2), col % (n1 * n2));
        // column-major position within the block
        e.blocks_mut()[a][(rest % n1, rest / n1)] = Complex::new(1.0, 0.0);
        for (row, v) in flat(&op.apply(&e).unwrap()).into_iter().enumerate() {
            dense[(row, col)] = v;
        }
    }
    let asym = (&dense - dense.adjoint()).norm();
    let herm = (&dense + dense.adjoint()).map(|z| z * 0.5);
    let top = herm.symmetric_eigen().eigenvalues.iter().fold(0.0, |m: f64, v| m.max(v.abs()));
    (top, asym)
}

pub fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1e-300)
}
