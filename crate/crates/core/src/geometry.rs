//! Blockwise SVD, the tangent space `T̂` at a block-diagonal low-rank point
//! and its projector, plus average-case and worst-case incoherence.
//!
//! Incoherence is defined for square lifts only (odd `n`, `n1 = n2`). When
//! blocks have different ranks, `r` is taken as the largest block rank.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fourier::{unitary_dft, BlockDiagonal};
use crate::hankel::{g_basis, HankelShape};
use crate::sampling::stream_rng;
use crate::scalar::{all_finite, fro_sqr, norm_sqr, CMatrix, Real};

/// Default relative rank tolerance for [`block_svd`].
pub const DEFAULT_RANK_TOL: f64 = 1e-8;
/// Blocks whose largest singular value is below this are rank zero.
pub const ZERO_BLOCK_TOL: f64 = 1e-12;
/// Additive slack when checking the incoherence consequences.
pub const CONSEQUENCE_SLACK: f64 = 1e-10;

/// Singular factors `(Û_a, V̂_a)` of every block. Blocks of rank zero carry
/// factors with no columns.
#[derive(Debug, Clone, PartialEq)]
pub struct TangentSpace<T: Real> {
    shape: HankelShape,
    left: Vec<CMatrix<T>>,
    right: Vec<CMatrix<T>>,
}

impl<T: Real> TangentSpace<T> {
    /// Builds a tangent space from explicit factors, checking that the
    /// columns are orthonormal to `1e-8`.
    pub fn from_factors(shape: HankelShape, left: Vec<CMatrix<T>>, right: Vec<CMatrix<T>>) -> Result<Self> {
        if left.len() != right.len() || left.is_empty() {
            return Err(Error::InvalidArgument("need matching, non-empty factor lists".into()));
        }
        let tol = T::lit(1e-8);
        for (u, v) in left.iter().zip(&right) {
            if u.nrows() != shape.n1() || v.nrows() != shape.n2() || u.ncols() != v.ncols() {
                return Err(Error::dim(
                    "TangentSpace::from_factors",
                    format!("{}xr and {}xr", shape.n1(), shape.n2()),
                    format!("{}x{} and {}x{}", u.nrows(), u.ncols(), v.nrows(), v.ncols()),
                ));
            }
            for f in [u, v] {
                let gram = f.adjoint() * f;
                let eye = CMatrix::<T>::identity(f.ncols(), f.ncols());
                if fro_sqr(&(gram - eye)).sqrt() > tol {
                    return Err(Error::InvalidArgument("factor columns are not orthonormal".into()));
                }
            }
        }
        Ok(Self { shape, left, right })
    }

    pub fn d(&self) -> usize {
        self.left.len()
    }

    pub fn shape(&self) -> HankelShape {
        self.shape
    }

    pub fn left(&self) -> &[CMatrix<T>] {
        &self.left
    }

    pub fn right(&self) -> &[CMatrix<T>] {
        &self.right
    }

    pub fn ranks(&self) -> Vec<usize> {
        self.left.iter().map(|u| u.ncols()).collect()
    }

    /// Largest block rank.
    pub fn rank(&self) -> usize {
        self.ranks().into_iter().max().unwrap_or(0)
    }

    /// `ÛV̂ᴴ = diag(Û_a V̂_aᴴ)`.
    pub fn uv(&self) -> BlockDiagonal<T> {
        let blocks = self.left.iter().zip(&self.right).map(|(u, v)| u * v.adjoint()).collect();
        BlockDiagonal::from_blocks(blocks, self.shape).expect("factor shapes checked")
    }

    fn project_block(&self, a: usize, w: &CMatrix<T>) -> CMatrix<T> {
        let (u, v) = (&self.left[a], &self.right[a]);
        if u.ncols() == 0 {
            return CMatrix::zeros(w.nrows(), w.ncols());
        }
        let uhw = u.adjoint() * w;
        let wv = w * v;
        let uhwv = &uhw * v;
        u * uhw + (wv - u * uhwv) * v.adjoint()
    }

    fn check(&self, context: &'static str, w: &BlockDiagonal<T>) -> Result<()> {
        if w.d() != self.d() || w.shape() != self.shape {
            return Err(Error::dim(
                context,
                format!("{} blocks of {}x{}", self.d(), self.shape.n1(), self.shape.n2()),
                format!("{} blocks of {}x{}", w.d(), w.shape().n1(), w.shape().n2()),
            ));
        }
        Ok(())
    }

    /// `P_T̂(W)`, blockwise `ÛÛᴴW + WV̂V̂ᴴ − ÛÛᴴWV̂V̂ᴴ`.
    pub fn project(&self, w: &BlockDiagonal<T>) -> Result<BlockDiagonal<T>> {
        self.check("tangent_project", w)?;
        let blocks = w.blocks().iter().enumerate().map(|(a, b)| self.project_block(a, b)).collect();
        BlockDiagonal::from_blocks(blocks, self.shape)
    }

    /// `P_{T̂⊥}(W) = W − P_T̂(W)`.
    pub fn project_complement(&self, w: &BlockDiagonal<T>) -> Result<BlockDiagonal<T>> {
        Ok(w - &self.project(w)?)
    }

    /// `‖P_{T_a}(M)‖_F²` for a single block.
    pub fn block_projection_sqr(&self, a: usize, m: &CMatrix<T>) -> T {
        fro_sqr(&self.project_block(a, m))
    }

    /// Unit-norm element of `T̂` drawn from a seeded Gaussian.
    pub fn random_element(&self, seed: u64) -> BlockDiagonal<T> {
        use rand_distr::{Distribution, StandardNormal};
        let mut rng = stream_rng(seed, 0x7A6);
        let blocks = (0..self.d())
            .map(|_| {
                CMatrix::from_fn(self.shape.n1(), self.shape.n2(), |_, _| {
                    let re: f64 = StandardNormal.sample(&mut rng);
                    let im: f64 = StandardNormal.sample(&mut rng);
                    nalgebra::Complex::new(T::lit(re), T::lit(im))
                })
            })
            .collect();
        let w = BlockDiagonal::from_blocks(blocks, self.shape).expect("shape");
        let p = self.project(&w).expect("shape");
        let norm = p.fro();
        if norm > T::zero() {
            p.scale(norm.recip())
        } else {
            p
        }
    }
}

/// Compact SVD of each block. `r_a` counts singular values above
/// `rank_tol·σ_max(block)`; blocks with `σ_max < 1e-12` get rank zero.
/// Returns the tangent space and every block's full singular spectrum.
pub fn block_svd<T: Real>(z: &BlockDiagonal<T>, rank_tol: T) -> Result<(TangentSpace<T>, Vec<Vec<T>>)> {
    // written this way so NaN is rejected too
    #[allow(clippy::neg_cmp_op_on_partial_ord)]
    if !(rank_tol > T::zero()) {
        return Err(Error::InvalidArgument("rank_tol must be positive".into()));
    }
    let mut left = Vec::with_capacity(z.d());
    let mut right = Vec::with_capacity(z.d());
    let mut spectra = Vec::with_capacity(z.d());
    let (n1, n2) = (z.shape().n1(), z.shape().n2());
    for b in z.blocks() {
        if !all_finite(b) {
            return Err(Error::NonFinite("block_svd"));
        }
        let svd = b.clone().svd(true, true);
        let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
        order.sort_by(|&i, &j| {
            svd.singular_values[j]
                .partial_cmp(&svd.singular_values[i])
                .unwrap_or(std::cmp::Ordering::Equal)
        });
        let sigma: Vec<T> = order.iter().map(|&i| svd.singular_values[i]).collect();
        let top = sigma.first().copied().unwrap_or(T::zero());
        let rank = if top < T::lit(ZERO_BLOCK_TOL) {
            0
        } else {
            sigma.iter().filter(|&&s| s > rank_tol * top).count()
        };
        let u = svd.u.expect("left vectors requested");
        let v_t = svd.v_t.expect("right vectors requested");
        left.push(CMatrix::from_fn(n1, rank, |i, c| u[(i, order[c])]));
        right.push(CMatrix::from_fn(n2, rank, |i, c| v_t[(order[c], i)].conj()));
        spectra.push(sigma);
    }
    Ok((
        TangentSpace {
            shape: z.shape(),
            left,
            right,
        },
        spectra,
    ))
}

/// [`TangentSpace::project`] as a free function.
pub fn tangent_project<T: Real>(t: &TangentSpace<T>, w: &BlockDiagonal<T>) -> Result<BlockDiagonal<T>> {
    t.project(w)
}

/// Average-case incoherence of a tangent space.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Incoherence {
    pub n: usize,
    pub d: usize,
    pub r: usize,
    /// `max_i (1/d)Σ_a ‖e_iᵀÛ_a‖²`.
    pub raw_avg_u: f64,
    pub raw_avg_v: f64,
    pub mu_u: f64,
    pub mu_v: f64,
    pub mu0: f64,
}

/// Worst-case incoherence: the per-block maximum row energy.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WorstIncoherence {
    /// `max_{i,a} ‖e_iᵀÛ_a‖²`.
    pub raw_worst_u: f64,
    pub raw_worst_v: f64,
    pub mu1: f64,
}

fn require_square<T: Real>(t: &TangentSpace<T>) -> Result<usize> {
    if !t.shape.is_square() {
        return Err(Error::Domain(format!(
            "incoherence needs a square lift (odd n), got {}x{}",
            t.shape.n1(),
            t.shape.n2()
        )));
    }
    let r = t.rank();
    if r == 0 {
        return Err(Error::InvalidArgument("tangent space has rank zero".into()));
    }
    Ok(r)
}

fn row_energies<T: Real>(f: &CMatrix<T>) -> Vec<f64> {
    (0..f.nrows())
        .map(|i| f.row(i).iter().fold(T::zero(), |a, z| a + norm_sqr(*z)).as_f64())
        .collect()
}

fn averaged_max<T: Real>(factors: &[CMatrix<T>]) -> f64 {
    let rows = factors[0].nrows();
    let mut acc = vec![0.0; rows];
    for f in factors {
        for (a, e) in acc.iter_mut().zip(row_energies(f)) {
            *a += e;
        }
    }
    acc.iter().map(|a| a / factors.len() as f64).fold(0.0, f64::max)
}

fn worst_max<T: Real>(factors: &[CMatrix<T>]) -> f64 {
    factors.iter().flat_map(row_energies).fold(0.0, f64::max)
}

pub fn avg_incoherence<T: Real>(t: &TangentSpace<T>) -> Result<Incoherence> {
    let r = require_square(t)?;
    let n = t.shape.len();
    let raw_avg_u = averaged_max(&t.left);
    let raw_avg_v = averaged_max(&t.right);
    let scale = n as f64 / r as f64;
    let (mu_u, mu_v) = (scale * raw_avg_u, scale * raw_avg_v);
    Ok(Incoherence {
        n,
        d: t.d(),
        r,
        raw_avg_u,
        raw_avg_v,
        mu_u,
        mu_v,
        mu0: mu_u.max(mu_v),
    })
}

pub fn worst_incoherence<T: Real>(t: &TangentSpace<T>) -> Result<WorstIncoherence> {
    let r = require_square(t)?;
    let raw_worst_u = worst_max(&t.left);
    let raw_worst_v = worst_max(&t.right);
    Ok(WorstIncoherence {
        raw_worst_u,
        raw_worst_v,
        mu1: t.shape.len() as f64 / r as f64 * raw_worst_u.max(raw_worst_v),
    })
}

/// Left-hand sides of the two incoherence consequences and their bounds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IncoherenceReport {
    pub mu0: f64,
    /// `max_k (1/d)Σ_a ‖G_kᴴÛ_a‖_F²`.
    pub basis_u_energy: f64,
    /// `max_k (1/d)Σ_a ‖G_kV̂_a‖_F²`.
    pub basis_v_energy: f64,
    /// `μ₀r/n`.
    pub basis_bound: f64,
    /// `max_{j,k} ‖P_T̂ Ĝ(e_j e_kᵀ)‖_F²`.
    pub tangent_energy: f64,
    /// `2μ₀r/n`.
    pub tangent_bound: f64,
    pub basis_holds: bool,
    pub tangent_holds: bool,
    /// `bound − lhs` for each inequality (negative means violated).
    pub basis_margin: f64,
    pub tangent_margin: f64,
}

/// Evaluates both consequences of average-case incoherence by direct
/// computation against the `G_k` basis.
pub fn check_incoherence_consequences<T: Real>(t: &TangentSpace<T>) -> Result<IncoherenceReport> {
    let inc = avg_incoherence(t)?;
    let shape = t.shape;
    let (d, n) = (t.d(), shape.len());
    let dft = unitary_dft::<T>(d);

    let mut basis_u: f64 = 0.0;
    let mut basis_v: f64 = 0.0;
    let mut tangent: f64 = 0.0;
    for k in 0..n {
        let g = g_basis::<T>(k, shape)?;
        let gh = g.adjoint();
        let mut sum_u = 0.0;
        let mut sum_v = 0.0;
        let mut proj = Vec::with_capacity(d);
        for a in 0..d {
            sum_u += fro_sqr(&(&gh * &t.left[a])).as_f64();
            sum_v += fro_sqr(&(&g * &t.right[a])).as_f64();
            proj.push(t.block_projection_sqr(a, &g).as_f64());
        }
        basis_u = basis_u.max(sum_u / d as f64);
        basis_v = basis_v.max(sum_v / d as f64);
        // Block a of Ĝ(e_j e_kᵀ) is F[a,j]·G_k.
        for j in 0..d {
            let e: f64 = (0..d).map(|a| norm_sqr(dft[(a, j)]).as_f64() * proj[a]).sum();
            tangent = tangent.max(e);
        }
    }
    let basis_bound = inc.mu0 * inc.r as f64 / n as f64;
    let tangent_bound = 2.0 * basis_bound;
    let basis_margin = basis_bound - basis_u.max(basis_v);
    let tangent_margin = tangent_bound - tangent;
    Ok(IncoherenceReport {
        mu0: inc.mu0,
        basis_u_energy: basis_u,
        basis_v_energy: basis_v,
        basis_bound,
        tangent_energy: tangent,
        tangent_bound,
        basis_holds: basis_margin >= -CONSEQUENCE_SLACK,
        tangent_holds: tangent_margin >= -CONSEQUENCE_SLACK,
        basis_margin,
        tangent_margin,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fourier::hankel_blockdiag;
    use crate::signals::gen_special;
    use nalgebra::Complex;

    fn special_tangent(d: usize, n: usize) -> TangentSpace<f64> {
        let shape = HankelShape::square_for_length(n).unwrap();
        let z = hankel_blockdiag(&gen_special::<f64>(d, n), shape).unwrap();
        block_svd(&z, DEFAULT_RANK_TOL).unwrap().0
    }

    #[test]
    fn special_matrix_geometry() {
        let (d, n) = (8, 15);
        let t = special_tangent(d, n);
        let ranks = t.ranks();
        assert_eq!(ranks[0], 1);
        assert!(ranks[1..].iter().all(|&r| r == 0));
        assert!((t.left()[0][(0, 0)].norm() - 1.0).abs() < 1e-12);
        assert!((t.right()[0][(0, 0)].norm() - 1.0).abs() < 1e-12);

        let inc = avg_incoherence(&t).unwrap();
        assert!((inc.raw_avg_u - 1.0 / d as f64).abs() < 1e-12);
        assert!((inc.mu0 - n as f64 / d as f64).abs() < 1e-10);
        let worst = worst_incoherence(&t).unwrap();
        assert!((worst.raw_worst_u - 1.0).abs() < 1e-12);
        assert!(worst.mu1 >= inc.mu0);

        let rep = check_incoherence_consequences(&t).unwrap();
        assert!(rep.basis_holds && rep.tangent_holds, "{rep:?}");
    }

    #[test]
    fn identity_block_has_full_rank() {
        let shape = HankelShape::new(4, 4).unwrap();
        let z = BlockDiagonal::from_blocks(vec![CMatrix::<f64>::identity(4, 4)], shape).unwrap();
        let (t, _) = block_svd(&z, 1e-8).unwrap();
        assert_eq!(t.ranks(), vec![4]);
    }

    #[test]
    fn single_block_unit_factors() {
        // d = 1, Û = V̂ = e₁: raw max = 1, μ0 = n.
        let shape = HankelShape::new(3, 3).unwrap();
        let e1 = CMatrix::<f64>::from_fn(3, 1, |i, _| Complex::new(if i == 0 { 1.0 } else { 0.0 }, 0.0));
        let t = TangentSpace::from_factors(shape, vec![e1.clone()], vec![e1]).unwrap();
        let inc = avg_incoherence(&t).unwrap();
        assert!((inc.mu0 - 5.0).abs() < 1e-12);
        let rep = check_incoherence_consequences(&t).unwrap();
        // G₁ = e₁e₁ᵀ lies in T, so the tangent energy at k = 1 is exactly 1.
        assert!((rep.tangent_energy - 1.0).abs() < 1e-12);
        assert!(rep.tangent_energy <= rep.tangent_bound);
    }

    #[test]
    fn dft_column_factors() {
        let (d, n1, r) = (3, 4, 2);
        let n = 2 * n1 - 1;
        let shape = HankelShape::new(n1, n1).unwrap();
        let f = unitary_dft::<f64>(n1);
        let u = f.columns(0, r).clone_owned();
        let t = TangentSpace::from_factors(shape, vec![u.clone(); d], vec![u; d]).unwrap();
        let inc = avg_incoherence(&t).unwrap();
        assert!((inc.raw_avg_u - r as f64 / n1 as f64).abs() < 1e-12);
        assert!((inc.mu0 - n as f64 / n1 as f64).abs() < 1e-12);
        let worst = worst_incoherence(&t).unwrap();
        assert!((worst.mu1 - inc.mu0).abs() < 1e-12);
        let rep = check_incoherence_consequences(&t).unwrap();
        assert!(rep.basis_holds && rep.tangent_holds);
    }

    #[test]
    fn projector_properties() {
        let t = {
            let shape = HankelShape::new(4, 4).unwrap();
            let z = crate::fourier::ghat_lift(
                &CMatrix::<f64>::from_fn(3, 7, |i, k| Complex::new((i + 1) as f64 * (k as f64 * 0.4).cos(), 0.0)),
                shape,
            )
            .unwrap();
            // keep only the leading singular pair of each block
            let (full, _) = block_svd(&z, 0.5).unwrap();
            full
        };
        let uv = t.uv();
        assert!((&t.project(&uv).unwrap() - &uv).fro() < 1e-12);

        let w = t.random_element(3);
        let raw = BlockDiagonal::from_blocks(
            (0..3)
                .map(|a| CMatrix::<f64>::from_fn(4, 4, |i, k| Complex::new((a + i * k) as f64, i as f64 - k as f64)))
                .collect(),
            t.shape(),
        )
        .unwrap();
        let p = t.project(&raw).unwrap();
        assert!((&t.project(&p).unwrap() - &p).fro() < 1e-12 * raw.fro());
        let q = t.project_complement(&raw).unwrap();
        assert!(p.inner(&q).norm() < 1e-10 * raw.fro_sqr());
        assert!(p.fro() <= raw.fro() + 1e-12);
        assert!((w.fro() - 1.0).abs() < 1e-12);
        let lhs = t.project(&raw).unwrap().inner(&w);
        let rhs = raw.inner(&t.project(&w).unwrap());
        assert!((lhs - rhs).norm() < 1e-10);
    }

    #[test]
    fn theory_checks_reject_even_length() {
        let shape = HankelShape::new(4, 3).unwrap();
        let z = BlockDiagonal::from_blocks(vec![CMatrix::<f64>::identity(4, 3)], shape).unwrap();
        let (t, _) = block_svd(&z, 1e-8).unwrap();
        assert!(matches!(avg_incoherence(&t), Err(Error::Domain(_))));
        let zero = BlockDiagonal::<f64>::zeros(2, HankelShape::new(3, 3).unwrap());
        let (t0, _) = block_svd(&zero, 1e-8).unwrap();
        assert_eq!(t0.rank(), 0);
        assert!(avg_incoherence(&t0).is_err());
    }
}
