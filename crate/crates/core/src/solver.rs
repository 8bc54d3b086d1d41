//! ADMM solver for
//!
//! ```text
//! minimize  Σ_i ‖H(e_iᵀ F X)‖_*   subject to  P_Ω(X) = P_Ω(X♮)
//! ```
//!
//! and its 3D counterpart, where `H` is replaced by the two-level lift of
//! each frontal slice of the tube-transformed array.
//!
//! The splitting introduces `Z_i = H(row i of F·X)` with scaled multipliers
//! `Λ_i`. Because `H*H = diag(w)` and `F` is unitary, the `X`-update is a
//! closed-form entrywise division by the anti-diagonal weights on the
//! unobserved positions; observed positions stay pinned to the data, so
//! every iterate is feasible.

use nalgebra::Complex;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fourier::{unitary_dft, Array3, BlockDiagonal};
use crate::hankel::{
    antidiag_weights, hankel_adjoint, hankel_lift, two_level_adjoint, two_level_lift, two_level_weights,
    HankelShape, TwoLevelShape,
};
use crate::sampling::SamplingMask;
use crate::scalar::{all_finite, c_zero, fro, fro_sqr, matmul, CMatrix, Real};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverConfig {
    /// ADMM penalty; singular values are thresholded at `1/rho`.
    pub rho: f64,
    pub tol_primal: f64,
    pub tol_dual: f64,
    pub max_iter: usize,
    /// Relative error below which a recovery counts as a success.
    pub success_threshold: f64,
    /// Record `Σ_i ‖H(row i of F·X)‖_*` after every iteration.
    pub track_objective: bool,
    /// Rebalance `rho` by a factor of two whenever one residual exceeds the
    /// other tenfold, rescaling the multipliers to match. `rho` is then only
    /// the starting value.
    pub adaptive_rho: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            rho: 0.05,
            tol_primal: 1e-7,
            tol_dual: 1e-7,
            max_iter: 3000,
            success_threshold: 1e-3,
            track_objective: false,
            adaptive_rho: false,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("rho", self.rho),
            ("tol_primal", self.tol_primal),
            ("tol_dual", self.tol_dual),
            ("success_threshold", self.success_threshold),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidArgument(format!("{name} must be positive, got {v}")));
            }
        }
        if self.max_iter == 0 {
            return Err(Error::InvalidArgument("max_iter must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct SolveResult<X> {
    pub x: X,
    pub iterations: usize,
    pub primal_residual: f64,
    pub dual_residual: f64,
    pub converged: bool,
    /// `‖X − X♮‖_F/‖X♮‖_F`, filled in by [`SolveResult::score`].
    pub relative_error: Option<f64>,
    pub objective_trace: Vec<f64>,
}

impl<T: Real> SolveResult<CMatrix<T>> {
    pub fn score(&mut self, truth: &CMatrix<T>) -> Result<f64> {
        let e = relative_error(&self.x, truth)?.as_f64();
        self.relative_error = Some(e);
        Ok(e)
    }
}

impl<T: Real> SolveResult<Array3<T>> {
    pub fn score(&mut self, truth: &Array3<T>) -> Result<f64> {
        let e = relative_error_3d(&self.x, truth)?.as_f64();
        self.relative_error = Some(e);
        Ok(e)
    }
}

/// Singular value thresholding: `U·max(Σ − τ, 0)·Vᴴ`.
pub fn svt<T: Real>(m: &CMatrix<T>, tau: T) -> Result<CMatrix<T>> {
    if tau < T::zero() {
        return Err(Error::InvalidArgument("svt threshold must be nonnegative".into()));
    }
    if !all_finite(m) {
        return Err(Error::NonFinite("svt"));
    }
    Ok(svt_unchecked(m, tau))
}

fn svt_unchecked<T: Real>(m: &CMatrix<T>, tau: T) -> CMatrix<T> {
    // σ₁ ≤ ‖M‖_F, so nothing survives the threshold.
    if fro(m) <= tau {
        return CMatrix::zeros(m.nrows(), m.ncols());
    }
    // With M v_c = σ_c u_c the result is M·Σ_c (1 − τ/σ_c) v_c v_cᴴ, which
    // spares computing U.
    let svd = m.clone().svd(false, true);
    let v_t = svd.v_t.expect("right vectors requested");
    let kept: Vec<usize> = (0..svd.singular_values.len())
        .filter(|&c| svd.singular_values[c] > tau)
        .collect();
    if kept.is_empty() {
        return CMatrix::zeros(m.nrows(), m.ncols());
    }
    let w = v_t.select_rows(&kept);
    let mut scaled = w.adjoint();
    for (j, &c) in kept.iter().enumerate() {
        let s = svd.singular_values[c];
        scaled.column_mut(j).scale_mut((s - tau) / s);
    }
    matmul(&matmul(m, &scaled), &w)
}

/// Nuclear norm (sum of singular values).
pub fn nuclear_norm<T: Real>(m: &CMatrix<T>) -> T {
    m.clone().singular_values().iter().fold(T::zero(), |a, &s| a + s)
}

/// `‖X − X_ref‖_F / ‖X_ref‖_F`.
pub fn relative_error<T: Real>(x: &CMatrix<T>, reference: &CMatrix<T>) -> Result<T> {
    if x.shape() != reference.shape() {
        return Err(Error::dim(
            "relative_error",
            format!("{}x{}", reference.nrows(), reference.ncols()),
            format!("{}x{}", x.nrows(), x.ncols()),
        ));
    }
    let denom = fro(reference);
    if denom == T::zero() {
        return Err(Error::InvalidArgument("reference has zero norm".into()));
    }
    Ok(fro(&(x - reference)) / denom)
}

/// [`relative_error`] for 3D arrays.
pub fn relative_error_3d<T: Real>(x: &Array3<T>, reference: &Array3<T>) -> Result<T> {
    if x.dims() != reference.dims() {
        return Err(Error::dim("relative_error_3d", format!("{:?}", reference.dims()), format!("{:?}", x.dims())));
    }
    relative_error(&x.to_tube_rows(), &reference.to_tube_rows())
}

/// Per-row lift used by the ADMM core. Rows have length `n` for the 1D
/// lift and `n·s` (a row-major slice) for the two-level lift.
#[derive(Debug, Clone, Copy)]
enum Lifter {
    OneLevel(HankelShape),
    TwoLevel(TwoLevelShape),
}

impl Lifter {
    fn row_len(&self) -> usize {
        match self {
            Lifter::OneLevel(sh) => sh.len(),
            Lifter::TwoLevel(sh) => {
                let (n, s) = sh.slice_dims();
                n * s
            }
        }
    }

    fn lift<T: Real>(&self, row: &[Complex<T>]) -> CMatrix<T> {
        match self {
            Lifter::OneLevel(sh) => hankel_lift(row, *sh).expect("row length checked"),
            Lifter::TwoLevel(sh) => {
                let (n, s) = sh.slice_dims();
                let slice = CMatrix::from_fn(n, s, |j, k| row[j * s + k]);
                two_level_lift(&slice, *sh).expect("slice dims checked")
            }
        }
    }

    fn adjoint<T: Real>(&self, m: &CMatrix<T>) -> Vec<Complex<T>> {
        match self {
            Lifter::OneLevel(sh) => hankel_adjoint(m, *sh).expect("block dims checked").as_slice().to_vec(),
            Lifter::TwoLevel(sh) => {
                let slice = two_level_adjoint(m, *sh).expect("block dims checked");
                let (n, s) = sh.slice_dims();
                (0..n * s).map(|idx| slice[(idx / s, idx % s)]).collect()
            }
        }
    }

    fn weights(&self) -> Vec<usize> {
        match self {
            Lifter::OneLevel(sh) => antidiag_weights(*sh).as_slice().to_vec(),
            Lifter::TwoLevel(sh) => {
                let w = two_level_weights(*sh);
                let (n, s) = sh.slice_dims();
                (0..n * s).map(|idx| w[(idx / s, idx % s)]).collect()
            }
        }
    }
}

fn row_of<T: Real>(m: &CMatrix<T>, i: usize) -> Vec<Complex<T>> {
    m.row(i).iter().copied().collect()
}

struct Problem<'a, T: Real> {
    observed: &'a CMatrix<T>,
    mask: Vec<Vec<bool>>,
    lifter: Lifter,
    weights: Vec<T>,
    forward: CMatrix<T>,
    inverse: CMatrix<T>,
}

impl<'a, T: Real> Problem<'a, T> {
    fn new(observed: &'a CMatrix<T>, mask: Vec<Vec<bool>>, lifter: Lifter) -> Self {
        let d = observed.nrows();
        let forward = unitary_dft::<T>(d);
        let inverse = forward.adjoint();
        let weights = lifter.weights().into_iter().map(T::from_count).collect();
        Self {
            observed,
            mask,
            lifter,
            weights,
            forward,
            inverse,
        }
    }

    fn lift_all(&self, x: &CMatrix<T>) -> Vec<CMatrix<T>> {
        let xhat = matmul(&self.forward, x);
        (0..xhat.nrows()).map(|i| self.lifter.lift(&row_of(&xhat, i))).collect()
    }

    /// Minimizes `Σ_i ‖lift(row i of F·X) − M_i‖_F²` over the unobserved
    /// entries with the observed ones fixed.
    fn x_step(&self, targets: &[CMatrix<T>]) -> CMatrix<T> {
        let (d, m) = self.observed.shape();
        let mut rows = CMatrix::from_element(d, m, c_zero());
        for (i, t) in targets.iter().enumerate() {
            for (k, z) in self.lifter.adjoint(t).into_iter().enumerate() {
                rows[(i, k)] = z;
            }
        }
        let b = matmul(&self.inverse, &rows);
        CMatrix::from_fn(d, m, |i, k| {
            if self.mask[i][k] {
                self.observed[(i, k)]
            } else {
                b[(i, k)].unscale(self.weights[k])
            }
        })
    }

    fn initial(&self) -> CMatrix<T> {
        let (d, m) = self.observed.shape();
        CMatrix::from_fn(d, m, |i, k| if self.mask[i][k] { self.observed[(i, k)] } else { c_zero() })
    }

    fn solve(&self, cfg: &SolverConfig) -> SolveResult<CMatrix<T>> {
        let mut x = self.initial();
        if self.mask.iter().flatten().all(|&b| b) {
            return SolveResult {
                x,
                iterations: 1,
                primal_residual: 0.0,
                dual_residual: 0.0,
                converged: true,
                relative_error: None,
                objective_trace: Vec::new(),
            };
        }

        let mut rho = T::lit(cfg.rho);
        let mut lifted = self.lift_all(&x);
        let mut z = lifted.clone();
        let mut lambda: Vec<CMatrix<T>> = z.iter().map(|b| CMatrix::zeros(b.nrows(), b.ncols())).collect();
        let mut trace = Vec::new();
        let (mut primal, mut dual) = (f64::INFINITY, f64::INFINITY);

        for iter in 1..=cfg.max_iter {
            let z_new: Vec<CMatrix<T>> = lifted
                .par_iter()
                .zip(lambda.par_iter())
                .map(|(a, l)| svt_unchecked(&(a + l), rho.recip()))
                .collect();
            let targets: Vec<CMatrix<T>> = z_new.iter().zip(&lambda).map(|(zi, li)| zi - li).collect();
            x = self.x_step(&targets);
            lifted = self.lift_all(&x);

            let mut gap = T::zero();
            let mut change = T::zero();
            for i in 0..lifted.len() {
                let r = &lifted[i] - &z_new[i];
                gap += fro_sqr(&r);
                change += fro_sqr(&(&z_new[i] - &z[i]));
                lambda[i] += r;
            }
            z = z_new;
            let z_norm = z.iter().fold(T::zero(), |a, b| a + fro_sqr(b)).sqrt();
            let l_norm = lambda.iter().fold(T::zero(), |a, b| a + fro_sqr(b)).sqrt();
            primal = (gap.sqrt() / z_norm.max(T::one())).as_f64();
            dual = (rho * change.sqrt() / l_norm.max(T::one())).as_f64();

            if cfg.track_objective {
                trace.push(lifted.iter().map(|b| nuclear_norm(b).as_f64()).sum());
            }
            if primal <= cfg.tol_primal && dual <= cfg.tol_dual {
                return SolveResult {
                    x,
                    iterations: iter,
                    primal_residual: primal,
                    dual_residual: dual,
                    converged: true,
                    relative_error: None,
                    objective_trace: trace,
                };
            }
            if cfg.adaptive_rho {
                let two = T::lit(2.0);
                if primal > 10.0 * dual {
                    rho *= two;
                    lambda.iter_mut().for_each(|l| l.unscale_mut(two));
                } else if dual > 10.0 * primal {
                    rho /= two;
                    lambda.iter_mut().for_each(|l| l.scale_mut(two));
                }
            }
        }
        SolveResult {
            x,
            iterations: cfg.max_iter,
            primal_residual: primal,
            dual_residual: dual,
            converged: false,
            relative_error: None,
            objective_trace: trace,
        }
    }
}

/// Completes a `d × n` matrix from the entries selected by `mask`.
/// Unobserved entries of `observed` are ignored.
pub fn admm_complete<T: Real>(
    observed: &CMatrix<T>,
    mask: &SamplingMask,
    shape: HankelShape,
    cfg: &SolverConfig,
) -> Result<SolveResult<CMatrix<T>>> {
    cfg.validate()?;
    let (d, n) = observed.shape();
    if mask.dims() != [d, n] {
        return Err(Error::dim("admm_complete", format!("mask {d}x{n}"), format!("{:?}", mask.dims())));
    }
    shape.check_len("admm_complete", n)?;
    if !all_finite(observed) {
        return Err(Error::NonFinite("admm_complete"));
    }
    let problem = Problem::new(observed, mask.tube_rows(), Lifter::OneLevel(shape));
    Ok(problem.solve(cfg))
}

/// Completes an `n × s × d` array; the two-level lift acts on each frontal
/// slice after the DFT along the tubes.
pub fn admm_complete_3d<T: Real>(
    observed: &Array3<T>,
    mask: &SamplingMask,
    shape: TwoLevelShape,
    cfg: &SolverConfig,
) -> Result<SolveResult<Array3<T>>> {
    cfg.validate()?;
    let (n, s, d) = observed.dims();
    if mask.dims() != [n, s, d] {
        return Err(Error::dim("admm_complete_3d", format!("mask {n}x{s}x{d}"), format!("{:?}", mask.dims())));
    }
    if shape.slice_dims() != (n, s) {
        return Err(Error::dim("admm_complete_3d", format!("{:?}", shape.slice_dims()), format!("({n}, {s})")));
    }
    let rows = observed.to_tube_rows();
    if !all_finite(&rows) {
        return Err(Error::NonFinite("admm_complete_3d"));
    }
    let problem = Problem::new(&rows, mask.tube_rows(), Lifter::TwoLevel(shape));
    debug_assert_eq!(problem.lifter.row_len(), n * s);
    let r = problem.solve(cfg);
    Ok(SolveResult {
        x: Array3::from_tube_rows(&r.x, n, s)?,
        iterations: r.iterations,
        primal_residual: r.primal_residual,
        dual_residual: r.dual_residual,
        converged: r.converged,
        relative_error: None,
        objective_trace: r.objective_trace,
    })
}

/// The closed-form `X`-update on its own: the minimizer of
/// `Σ_i ‖H(row i of F·X) − M_i‖_F²` over the entries outside `mask`, with
/// the observed entries held at `observed`.
pub fn x_step<T: Real>(observed: &CMatrix<T>, mask: &SamplingMask, targets: &BlockDiagonal<T>) -> Result<CMatrix<T>> {
    let (d, n) = observed.shape();
    if mask.dims() != [d, n] || targets.d() != d {
        return Err(Error::dim("x_step", format!("{d}x{n}"), format!("{:?}", mask.dims())));
    }
    targets.shape().check_len("x_step", n)?;
    let problem = Problem::new(observed, mask.tube_rows(), Lifter::OneLevel(targets.shape()));
    Ok(problem.x_step(targets.blocks()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::DMatrix;

    fn c(re: f64) -> Complex<f64> {
        Complex::new(re, 0.0)
    }

    #[test]
    fn svt_examples() {
        let m = CMatrix::<f64>::from_fn(3, 2, |i, k| Complex::new(i as f64 - k as f64, 0.5 * (i + k) as f64));
        let same = svt(&m, 0.0).unwrap();
        assert!(fro(&(same - &m)) < 1e-12);

        let big = crate::scalar::spectral_norm(&m);
        assert!(fro(&svt(&m, big).unwrap()) < 1e-12);
        assert_eq!(fro(&svt(&m, 2.0 * big).unwrap()), 0.0);

        let diag = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![c(3.0), c(1.0)]));
        let out = svt(&diag, 2.0).unwrap();
        let expect = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![c(1.0), c(0.0)]));
        assert!(fro(&(out - expect)) < 1e-12);
    }

    #[test]
    fn svt_shrinks_nuclear_norm_and_rejects_bad_input() {
        let m = CMatrix::<f64>::from_fn(4, 4, |i, k| Complex::new(((i * 3 + k) % 5) as f64, (i as f64) - 1.5));
        let out = svt(&m, 1.0).unwrap();
        assert!(nuclear_norm(&out) <= nuclear_norm(&m));
        let mut bad = m.clone();
        bad[(0, 0)] = Complex::new(f64::NAN, 0.0);
        assert!(matches!(svt(&bad, 1.0), Err(Error::NonFinite(_))));
        assert!(svt(&m, -1.0).is_err());
    }

    #[test]
    fn relative_error_examples() {
        let x = CMatrix::<f64>::from_fn(2, 3, |i, k| c((i + k) as f64 + 1.0));
        assert_eq!(relative_error(&x, &x).unwrap(), 0.0);
        assert!((relative_error(&CMatrix::zeros(2, 3), &x).unwrap() - 1.0).abs() < 1e-15);
        assert!((relative_error(&x.map(|z| z * 2.0), &x).unwrap() - 1.0).abs() < 1e-15);
        assert!(relative_error(&x, &CMatrix::zeros(2, 3)).is_err());
        assert!(relative_error(&x, &CMatrix::zeros(3, 2)).is_err());
    }

    #[test]
    fn config_validation() {
        assert!(SolverConfig::default().validate().is_ok());
        let bad = SolverConfig { rho: 0.0, ..Default::default() };
        assert!(bad.validate().is_err());
        let bad = SolverConfig { max_iter: 0, ..Default::default() };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn full_mask_returns_data() {
        let x = CMatrix::<f64>::from_fn(4, 5, |i, k| Complex::new((i * k) as f64, 1.0));
        let mask = SamplingMask::full(&[4, 5]).unwrap();
        let shape = HankelShape::for_length(5).unwrap();
        let mut r = admm_complete(&x, &mask, shape, &SolverConfig::default()).unwrap();
        assert_eq!(r.iterations, 1);
        assert!(r.score(&x).unwrap() <= 1e-10);
    }

    #[test]
    fn zero_data_stays_zero() {
        let x = Array3::<f64>::zeros(3, 3, 4);
        let mask = crate::sampling::bernoulli_mask(&[3, 3, 4], 0.5, 1).unwrap();
        let shape = TwoLevelShape::new(2, 2, 2, 2).unwrap();
        let r = admm_complete_3d(&x, &mask, shape, &SolverConfig::default()).unwrap();
        assert_eq!(r.x.fro(), 0.0);
        assert!(r.converged);
    }

    #[test]
    fn dimension_errors() {
        let x = CMatrix::<f64>::zeros(4, 5);
        let shape = HankelShape::for_length(5).unwrap();
        let mask = SamplingMask::full(&[4, 6]).unwrap();
        assert!(admm_complete(&x, &mask, shape, &SolverConfig::default()).is_err());
        let mask = SamplingMask::full(&[4, 5]).unwrap();
        let wrong = HankelShape::new(2, 2).unwrap();
        assert!(admm_complete(&x, &mask, wrong, &SolverConfig::default()).is_err());
    }
}
