//! Dual-certificate machinery for the Fourier-domain Hankel program.
//!
//! A block-diagonal `Λ` certifies that `Ẑ♮` is the unique optimum when it
//! is supported on the observed coefficients, its tangent component is
//! within `1/n` of `ÛV̂ᴴ`, its normal component has spectral norm at most
//! `1/2`, and the sampled operator restricted to `T̂` deviates from its
//! mean by at most `1/2`. This module builds `Λ` by the golfing scheme and
//! evaluates all four conditions.

use nalgebra::{Complex, DMatrix};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fourier::{unitary_dft, BlockDiagonal, FourierLift};
use crate::geometry::TangentSpace;
use crate::sampling::{GolfingPartition, SamplingMask};
use crate::scalar::{norm_sqr, CMatrix, Real};

/// Tolerance on the support condition `ĜP_ΩĜ*(Λ) = ĜĜ*(Λ)`.
pub const OMEGA_TOL: f64 = 1e-9;
/// Bound on the normal component and on the sampled-operator deviation.
pub const HALF: f64 = 0.5;

/// `‖Z‖_{Ĝ,F}` computed blockwise:
/// `sqrt((1/d)·Σ_i Σ_k |⟨Z_i, G_k⟩|²/w_k)`.
pub fn gf_norm<T: Real>(z: &BlockDiagonal<T>) -> Result<T> {
    let lift = FourierLift::<T>::new(z.d(), z.shape())?;
    let rows = lift.adjoint_rows(z)?;
    let d = T::from_count(z.d());
    let mut acc = T::zero();
    for i in 0..z.d() {
        for (k, &w) in lift.weights().iter().enumerate() {
            acc += norm_sqr(rows[(i, k)]) / T::from_count(w);
        }
    }
    Ok((acc / d).sqrt())
}

/// `‖Z‖_{Ĝ,F}` by its definition over the basis `{Ĝ_{j,k}}`:
/// `sqrt(Σ_{j,k} |⟨Z, Ĝ_{j,k}⟩|²/(d·w_k))`. Quadratic in `d·n`; intended as
/// a reference for [`gf_norm`].
pub fn gf_norm_by_basis<T: Real>(z: &BlockDiagonal<T>) -> Result<T> {
    let lift = FourierLift::<T>::new(z.d(), z.shape())?;
    let d = z.d();
    let mut acc = T::zero();
    for j in 0..d {
        for (k, &w) in lift.weights().iter().enumerate() {
            let g = lift.basis(j, k)?;
            acc += norm_sqr(z.inner(&g)) / T::from_count(d * w);
        }
    }
    Ok(acc.sqrt())
}

/// `‖Z‖_{Ĝ,∞} = max_{j,k} |⟨Z, Ĝ_{j,k}⟩|/√(d·w_k)`, using
/// `⟨Ĝ_{j,k}, Z⟩ = [Ĝ*(Z)]_{j,k}`.
pub fn ginf_norm<T: Real>(z: &BlockDiagonal<T>) -> Result<T> {
    let lift = FourierLift::<T>::new(z.d(), z.shape())?;
    let coeffs = lift.adjoint(z)?;
    let mut best = T::zero();
    for j in 0..z.d() {
        for (k, &w) in lift.weights().iter().enumerate() {
            let v = norm_sqr(coeffs[(j, k)]).sqrt() / T::from_count(z.d() * w).sqrt();
            if v > best {
                best = v;
            }
        }
    }
    Ok(best)
}

/// The self-adjoint map
/// `W ↦ (1/p)·P_T̂ĜP_ΩĜ*P_T̂(W) − P_T̂ĜĜ*P_T̂(W)`.
pub struct SampledDeviation<'a, T: Real> {
    tangent: &'a TangentSpace<T>,
    lift: FourierLift<T>,
    mask: &'a SamplingMask,
    inv_p: T,
}

impl<'a, T: Real> SampledDeviation<'a, T> {
    pub fn new(tangent: &'a TangentSpace<T>, mask: &'a SamplingMask, p: f64) -> Result<Self> {
        if !(p > 0.0 && p <= 1.0) {
            return Err(Error::InvalidArgument(format!("p must lie in (0, 1], got {p}")));
        }
        let lift = FourierLift::new(tangent.d(), tangent.shape())?;
        if mask.dims() != [lift.d(), lift.n()] {
            return Err(Error::dim(
                "SampledDeviation",
                format!("[{}, {}]", lift.d(), lift.n()),
                format!("{:?}", mask.dims()),
            ));
        }
        Ok(Self {
            tangent,
            lift,
            mask,
            inv_p: T::lit(1.0 / p),
        })
    }

    pub fn apply(&self, w: &BlockDiagonal<T>) -> Result<BlockDiagonal<T>> {
        let wt = self.tangent.project(w)?;
        let coeffs = self.lift.adjoint(&wt)?;
        let (d, n) = coeffs.shape();
        let mixed = DMatrix::from_fn(d, n, |i, k| {
            let c = coeffs[(i, k)];
            if self.mask.at(i, k) {
                c.scale(self.inv_p - T::one())
            } else {
                -c
            }
        });
        self.tangent.project(&self.lift.lift(&mixed)?)
    }
}

/// Options for the power iteration behind [`rip_deviation`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PowerOptions {
    pub max_iter: usize,
    /// Relative change of successive estimates at which to stop.
    pub tol: f64,
    pub seed: u64,
}

impl Default for PowerOptions {
    fn default() -> Self {
        Self {
            max_iter: 500,
            tol: 1e-4,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormEstimate {
    pub value: f64,
    pub iterations: usize,
    /// False when the iteration cap was hit first.
    pub converged: bool,
}

/// Operator norm of [`SampledDeviation`] by power iteration from a random
/// unit element of `T̂`. The estimate at step `k` is `‖A v_k‖` for the unit
/// iterate `v_k`; it increases monotonically towards the largest
/// eigenvalue magnitude.
pub fn rip_deviation<T: Real>(
    tangent: &TangentSpace<T>,
    mask: &SamplingMask,
    p: f64,
    opts: PowerOptions,
) -> Result<NormEstimate> {
    let op = SampledDeviation::new(tangent, mask, p)?;
    let mut v = tangent.random_element(opts.seed);
    if v.fro() == T::zero() {
        return Ok(NormEstimate {
            value: 0.0,
            iterations: 0,
            converged: true,
        });
    }
    let mut prev = 0.0;
    for iter in 1..=opts.max_iter {
        let w = op.apply(&v)?;
        let est = w.fro().as_f64();
        if est <= 1e-300 {
            return Ok(NormEstimate {
                value: est,
                iterations: iter,
                converged: true,
            });
        }
        // lower bound on the norm of a self-adjoint map; check both sides
        let rayleigh = v.inner(&w).re.as_f64().abs();
        if iter > 1 && (est - prev).abs() <= opts.tol * est && rayleigh <= est * (1.0 + 1e-12) {
            return Ok(NormEstimate {
                value: est,
                iterations: iter,
                converged: true,
            });
        }
        prev = est;
        v = w.scale(T::lit(1.0 / est));
    }
    Ok(NormEstimate {
        value: prev,
        iterations: opts.max_iter,
        converged: false,
    })
}

/// Golfing output: `Λ = Ẑ^{k0}` and `‖E_k‖_F` for `k = 0..=k0`, with
/// `E_k = ÛV̂ᴴ − P_T̂(Ẑ^k)`.
#[derive(Debug, Clone)]
pub struct GolfingCertificate<T: Real> {
    pub lambda: BlockDiagonal<T>,
    pub residuals: Vec<f64>,
}

impl<T: Real> GolfingCertificate<T> {
    /// Number of steps with `‖E_k‖_F ≤ ½‖E_{k−1}‖_F`.
    pub fn halving_steps(&self) -> usize {
        self.residuals.windows(2).filter(|w| w[1] <= 0.5 * w[0]).count()
    }
}

/// `Ẑ^k = Ẑ^{k−1} + ((1/q)ĜP_{Ω_k}Ĝ* + (I − ĜĜ*))·P_T̂(ÛV̂ᴴ − P_T̂(Ẑ^{k−1}))`.
pub fn golfing_certificate<T: Real>(
    tangent: &TangentSpace<T>,
    uv: &BlockDiagonal<T>,
    partition: &GolfingPartition,
) -> Result<GolfingCertificate<T>> {
    let lift = FourierLift::<T>::new(tangent.d(), tangent.shape())?;
    uv.check_same("golfing_certificate", &BlockDiagonal::zeros(tangent.d(), tangent.shape()))?;
    for m in &partition.masks {
        if m.dims() != [lift.d(), lift.n()] {
            return Err(Error::dim(
                "golfing_certificate",
                format!("[{}, {}]", lift.d(), lift.n()),
                format!("{:?}", m.dims()),
            ));
        }
    }
    let inv_q = T::lit(1.0 / partition.q);
    let mut z = BlockDiagonal::zeros(tangent.d(), tangent.shape());
    let mut e = tangent.project(uv)?;
    let mut residuals = vec![e.fro().as_f64()];
    for mask in &partition.masks {
        let coeffs = lift.adjoint(&e)?;
        let (d, n) = coeffs.shape();
        // (1/q)P_Ωk − I on the Hankel coefficients, plus the identity overall
        let sampled = DMatrix::from_fn(d, n, |i, k| {
            let c = coeffs[(i, k)];
            if mask.at(i, k) {
                c.scale(inv_q - T::one())
            } else {
                -c
            }
        });
        let step = &lift.lift(&sampled)? + &e;
        z = &z + &step;
        e = uv - &tangent.project(&z)?;
        residuals.push(e.fro().as_f64());
    }
    Ok(GolfingCertificate { lambda: z, residuals })
}

/// The four certificate conditions evaluated for a candidate `Λ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CertificateReport {
    /// `‖P_T̂(Λ) − ÛV̂ᴴ‖_F`.
    pub fro_gap: f64,
    /// `1/n`.
    pub fro_bound: f64,
    /// `‖P_{T̂⊥}(Λ)‖`.
    pub perp_norm: f64,
    pub perp_bound: f64,
    /// `‖ĜP_ΩĜ*(Λ) − ĜĜ*(Λ)‖_F`.
    pub omega_residual: f64,
    pub rip_deviation: f64,
    pub rip_converged: bool,
    pub passed: bool,
}

/// Checks `Λ` against the tangent space, the sampling set `mask` and the
/// signal length `n`.
pub fn verify_certificate<T: Real>(
    lambda: &BlockDiagonal<T>,
    tangent: &TangentSpace<T>,
    mask: &SamplingMask,
    p: f64,
    n: usize,
) -> Result<CertificateReport> {
    verify_certificate_with(lambda, tangent, mask, p, n, PowerOptions::default())
}

pub fn verify_certificate_with<T: Real>(
    lambda: &BlockDiagonal<T>,
    tangent: &TangentSpace<T>,
    mask: &SamplingMask,
    p: f64,
    n: usize,
    opts: PowerOptions,
) -> Result<CertificateReport> {
    if n != tangent.shape().len() {
        return Err(Error::dim("verify_certificate", tangent.shape().len(), n));
    }
    let lift = FourierLift::<T>::new(tangent.d(), tangent.shape())?;
    let uv = tangent.uv();
    let fro_gap = (&tangent.project(lambda)? - &uv).fro().as_f64();
    let perp_norm = tangent.project_complement(lambda)?.spectral_norm().as_f64();

    let coeffs = lift.adjoint(lambda)?;
    if mask.dims() != [lift.d(), lift.n()] {
        return Err(Error::dim("verify_certificate", format!("[{}, {}]", lift.d(), lift.n()), format!("{:?}", mask.dims())));
    }
    let off_support = DMatrix::from_fn(coeffs.nrows(), coeffs.ncols(), |i, k| {
        if mask.at(i, k) {
            Complex::new(T::zero(), T::zero())
        } else {
            coeffs[(i, k)]
        }
    });
    // Ĝ is an isometry, so ‖Ĝ(P_ΩC − C)‖_F = ‖P_{Ωᶜ}C‖_F.
    let omega_residual = lift.lift(&off_support)?.fro().as_f64();
    let rip = rip_deviation(tangent, mask, p, opts)?;

    let fro_bound = 1.0 / n as f64;
    let passed = fro_gap <= fro_bound && perp_norm <= HALF && omega_residual <= OMEGA_TOL && rip.value <= HALF;
    Ok(CertificateReport {
        fro_gap,
        fro_bound,
        perp_norm,
        perp_bound: HALF,
        omega_residual,
        rip_deviation: rip.value,
        rip_converged: rip.converged,
        passed,
    })
}

/// `‖P_T̂(W)‖_F` next to `(2√2/p)·‖P_{T̂⊥}(W)‖_F` for a feasible direction
/// `W`; a diagnostic only.
pub fn tangent_ratio_diagnostic<T: Real>(tangent: &TangentSpace<T>, w: &BlockDiagonal<T>, p: f64) -> Result<(f64, f64)> {
    let inside = tangent.project(w)?.fro().as_f64();
    let outside = tangent.project_complement(w)?.fro().as_f64();
    Ok((inside, 2.0 * 2f64.sqrt() / p * outside))
}

/// Closed-form certificate for the special matrix after reduction to
/// basis pursuit over the first column.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpecialCertificate {
    pub d: usize,
    /// Observed rows of the first column, 1-based.
    pub omega: Vec<usize>,
    /// `λ = (√d/|Ω|)·1_Ω`.
    pub lambda: Vec<f64>,
    /// `|[F D_Ω λ]_j|` for `j = 1..d`.
    pub magnitudes: Vec<f64>,
    /// `[F D_Ω λ]_1` as `(re, im)`.
    pub first_entry: (f64, f64),
    /// `max_{j≥2} |[F D_Ω λ]_j|`.
    pub max_off: f64,
    /// Ω contains two indices of different parity.
    pub mixed_parity: bool,
    pub passed: bool,
}

/// Builds `λ` for the observed row set `omega` (1-based) and checks
/// `[F D_Ω λ]_1 = 1` and `|[F D_Ω λ]_j| < 1` for `j ≥ 2`.
pub fn special_dual_certificate(omega: &[usize], d: usize) -> Result<SpecialCertificate> {
    if d == 0 || !d.is_power_of_two() {
        return Err(Error::Domain(format!("d must be a power of two, got {d}")));
    }
    let mut set = omega.to_vec();
    set.sort_unstable();
    set.dedup();
    if set.len() != omega.len() {
        return Err(Error::InvalidArgument("omega has duplicate indices".into()));
    }
    if let Some(&bad) = set.iter().find(|&&i| i == 0 || i > d) {
        return Err(Error::InvalidArgument(format!("omega index {bad} outside 1..={d}")));
    }
    if set.len() < 2 {
        return Err(Error::Underdetermined(format!(
            "need at least two observed rows, got {}",
            set.len()
        )));
    }
    let weight = (d as f64).sqrt() / set.len() as f64;
    let mut lambda = vec![0.0; d];
    for &i in &set {
        lambda[i - 1] = weight;
    }
    let f = unitary_dft::<f64>(d);
    let v = CMatrix::<f64>::from_fn(d, 1, |i, _| Complex::new(lambda[i], 0.0));
    let out = f * v;
    let magnitudes: Vec<f64> = out.iter().map(|z| z.norm()).collect();
    let first = out[(0, 0)];
    let max_off = magnitudes[1..].iter().copied().fold(0.0, f64::max);
    let mixed_parity = set.iter().any(|&i| i % 2 == 0) && set.iter().any(|&i| i % 2 == 1);
    let passed = (first - Complex::new(1.0, 0.0)).norm() <= 1e-12 && max_off < 1.0 - 1e-12;
    Ok(SpecialCertificate {
        d,
        omega: set,
        lambda,
        magnitudes,
        first_entry: (first.re, first.im),
        max_off,
        mixed_parity,
        passed,
    })
}
