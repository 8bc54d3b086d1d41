//! Ground-truth generators: spectrally sparse rows and slices, the special
//! rank-one matrix `1·e₁ᵀ`, and the two-spike rows that break worst-case
//! incoherence.
//!
//! Instances are generated in `f64`, certified to have numerical Hankel rank
//! `r` (`σ_{r+1}/σ₁ ≤ 1e-8`), and only then converted to the requested
//! scalar type.

use std::f64::consts::PI;

use log::warn;
use nalgebra::{Complex, DMatrix};
use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fourier::{inverse_tube_dft, unitary_dft, Array3};
use crate::hankel::{hankel_lift, two_level_lift, HankelShape, TwoLevelShape};
use crate::sampling::{stream_id, stream_rng};
use crate::scalar::{convert_matrix, tail_ratio, CMatrix, Real};

/// Rank certificate threshold on `σ_{r+1}/σ₁`.
pub const RANK_TOL: f64 = 1e-8;
/// Minimum circular gap between frequencies of one signal.
pub const FREQ_GAP: f64 = 1e-6;
const MAX_ATTEMPTS: u64 = 64;

/// Parameters of one spectrally sparse signal: `Σ_k d_k·exp(2πi f_k t)` in
/// 1D, `Σ_k d_k·w_k^j·z_k^l` in 2D.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectralSpec {
    pub r: usize,
    pub frequencies: Vec<f64>,
    /// Second-axis frequencies for slice signals.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub frequencies2: Option<Vec<f64>>,
    pub phases: Vec<f64>,
    pub magnitudes: Vec<f64>,
    pub seed: u64,
}

impl SpectralSpec {
    /// `d_k = (1 + 10^{0.5·c_k})·exp(i·ψ_k)`.
    pub fn amplitudes(&self) -> Vec<Complex<f64>> {
        self.magnitudes
            .iter()
            .zip(&self.phases)
            .map(|(&c, &psi)| Complex::from_polar(1.0 + 10f64.powf(0.5 * c), psi))
            .collect()
    }
}

fn circular_gap(a: f64, b: f64) -> f64 {
    let g = (a - b).abs();
    g.min(1.0 - g)
}

fn draw_frequencies(rng: &mut ChaCha8Rng, r: usize) -> Vec<f64> {
    let mut out: Vec<f64> = Vec::with_capacity(r);
    while out.len() < r {
        let f: f64 = rng.gen();
        if out.iter().all(|&g| circular_gap(f, g) >= FREQ_GAP) {
            out.push(f);
        }
    }
    out
}

fn draw_spec(rng: &mut ChaCha8Rng, r: usize, two_axes: bool, seed: u64) -> SpectralSpec {
    let frequencies = draw_frequencies(rng, r);
    let frequencies2 = two_axes.then(|| draw_frequencies(rng, r));
    let phases = (0..r).map(|_| rng.gen::<f64>() * 2.0 * PI).collect();
    let magnitudes = (0..r).map(|_| rng.gen::<f64>()).collect();
    SpectralSpec {
        r,
        frequencies,
        frequencies2,
        phases,
        magnitudes,
        seed,
    }
}

/// Samples `x(t) = Σ_k d_k exp(2πi f_k t)` at `t = 0..n-1`.
pub fn spectral_row(spec: &SpectralSpec, n: usize) -> Vec<Complex<f64>> {
    let amps = spec.amplitudes();
    (0..n)
        .map(|t| {
            amps.iter()
                .zip(&spec.frequencies)
                .map(|(a, f)| a * Complex::from_polar(1.0, 2.0 * PI * f * t as f64))
                .sum()
        })
        .collect()
}

/// Slice `S(j,l) = Σ_k d_k w_k^j z_k^l` for 1-based `j ∈ [n]`, `l ∈ [s]`.
pub fn spectral_slice(spec: &SpectralSpec, n: usize, s: usize) -> CMatrix<f64> {
    let amps = spec.amplitudes();
    let f2 = spec.frequencies2.as_ref().expect("slice spec carries two frequency axes");
    DMatrix::from_fn(n, s, |j, l| {
        amps.iter()
            .zip(spec.frequencies.iter().zip(f2))
            .map(|(a, (f1, f2))| {
                a * Complex::from_polar(1.0, 2.0 * PI * (f1 * (j + 1) as f64 + f2 * (l + 1) as f64))
            })
            .sum()
    })
}

/// A generated 2D instance: `X♮` with its Fourier-domain rows and per-row
/// parameters.
#[derive(Debug, Clone)]
pub struct SpectralMatrix<T: Real> {
    pub x: CMatrix<T>,
    pub xhat: CMatrix<T>,
    pub specs: Vec<SpectralSpec>,
}

/// Rows of `X̂♮` are independent spectrally sparse signals of length `n`
/// with `r` components; returns `X♮ = F⁻¹X̂♮`.
pub fn gen_spectral_matrix<T: Real>(d: usize, n: usize, r: usize, seed: u64) -> Result<SpectralMatrix<T>> {
    if d == 0 || n == 0 || r == 0 {
        return Err(Error::InvalidArgument(format!("invalid dims d={d}, n={n}, r={r}")));
    }
    let shape = HankelShape::for_length(n)?;
    let mut xhat = CMatrix::<f64>::zeros(d, n);
    let mut specs = Vec::with_capacity(d);
    for i in 0..d {
        let (spec, row) = certified(seed, i as u64, |rng, attempt| {
            let spec = draw_spec(rng, r, false, seed);
            let row = spectral_row(&spec, n);
            let ratio = tail_ratio(&hankel_lift(&row, shape).expect("length n"), r);
            if ratio > RANK_TOL {
                warn!("row {i} attempt {attempt}: tail ratio {ratio:e} above {RANK_TOL:e}, regenerating");
                None
            } else {
                Some((spec, row))
            }
        })?;
        for (k, z) in row.into_iter().enumerate() {
            xhat[(i, k)] = z;
        }
        specs.push(spec);
    }
    let x = unitary_dft::<f64>(d).adjoint() * &xhat;
    Ok(SpectralMatrix {
        x: convert_matrix(&x),
        xhat: convert_matrix(&xhat),
        specs,
    })
}

/// Runs `draw` on streams `(seed, item, attempt)` until it certifies.
fn certified<R>(
    seed: u64,
    item: u64,
    mut draw: impl FnMut(&mut ChaCha8Rng, u64) -> Option<R>,
) -> Result<R> {
    for attempt in 0..MAX_ATTEMPTS {
        let mut rng = stream_rng(seed, stream_id(&[item, attempt]));
        if let Some(out) = draw(&mut rng, attempt) {
            return Ok(out);
        }
    }
    Err(Error::Domain(format!(
        "could not certify rank for item {item} after {MAX_ATTEMPTS} attempts"
    )))
}

/// The special matrix `1·e₁ᵀ`: ones in the first column, zeros elsewhere.
pub fn gen_special<T: Real>(d: usize, n: usize) -> CMatrix<T> {
    DMatrix::from_fn(d, n, |_, k| {
        if k == 0 {
            Complex::new(T::one(), T::zero())
        } else {
            Complex::new(T::zero(), T::zero())
        }
    })
}

/// Zero vector of length `n` with ones at two positions chosen so that its
/// square Hankel lift has rank `r`: `k ∈ {r, n−r+1}`, and `j < r` when
/// `k = r`, `j > n−r+1` otherwise (1-based).
pub fn gen_adversarial_row(n: usize, r: usize, seed: u64) -> Result<Vec<Complex<f64>>> {
    let mut rng = stream_rng(seed, stream_id(&[0xAD]));
    adversarial_row(&mut rng, n, r)
}

fn adversarial_row(rng: &mut ChaCha8Rng, n: usize, r: usize) -> Result<Vec<Complex<f64>>> {
    if n.is_multiple_of(2) || r < 2 || r > (n - 1) / 2 {
        return Err(Error::InvalidArgument(format!(
            "adversarial row needs odd n and 2 <= r <= (n-1)/2, got n={n}, r={r}"
        )));
    }
    let low = rng.gen_bool(0.5);
    let (k, j) = if low {
        (r, rng.gen_range(1..r))
    } else {
        (n - r + 1, rng.gen_range(n - r + 2..=n))
    };
    let mut x = vec![Complex::new(0.0, 0.0); n];
    x[k - 1] = Complex::new(1.0, 0.0);
    x[j - 1] = Complex::new(1.0, 0.0);
    Ok(x)
}

/// Replaces `count` distinct random rows of the Fourier-domain matrix
/// `xhat` by adversarial rows and returns `F⁻¹·X̂` together with the
/// modified `X̂` and the replaced row indices.
pub fn replace_rows<T: Real>(
    xhat: &CMatrix<T>,
    count: usize,
    r: usize,
    seed: u64,
) -> Result<(CMatrix<T>, CMatrix<T>, Vec<usize>)> {
    let (d, n) = xhat.shape();
    if count > d {
        return Err(Error::InvalidArgument(format!("cannot replace {count} of {d} rows")));
    }
    let mut rng = stream_rng(seed, stream_id(&[0x2E9]));
    let mut rows: Vec<usize> = (0..d).collect();
    rows.shuffle(&mut rng);
    rows.truncate(count);
    rows.sort_unstable();
    let mut out = convert_matrix::<T, f64>(xhat);
    for &i in &rows {
        for (k, z) in adversarial_row(&mut rng, n, r)?.into_iter().enumerate() {
            out[(i, k)] = z;
        }
    }
    let x = unitary_dft::<f64>(d).adjoint() * &out;
    Ok((convert_matrix(&x), convert_matrix(&out), rows))
}

/// A generated 3D instance.
#[derive(Debug, Clone)]
pub struct SpectralArray<T: Real> {
    pub x: Array3<T>,
    pub xhat: Array3<T>,
    pub specs: Vec<SpectralSpec>,
}

/// Frontal slices of `X̂♮` are independent 2D spectrally sparse signals;
/// returns `X♮` obtained by the inverse DFT along every tube.
pub fn gen_spectral_3d<T: Real>(
    n: usize,
    s: usize,
    d: usize,
    r: usize,
    shape: TwoLevelShape,
    seed: u64,
) -> Result<SpectralArray<T>> {
    if n == 0 || s == 0 || d == 0 || r == 0 {
        return Err(Error::InvalidArgument(format!("invalid dims {n}x{s}x{d}, r={r}")));
    }
    if shape.slice_dims() != (n, s) {
        return Err(Error::dim("gen_spectral_3d", format!("{:?}", shape.slice_dims()), format!("({n}, {s})")));
    }
    let mut slices = Vec::with_capacity(d);
    let mut specs = Vec::with_capacity(d);
    for l in 0..d {
        let (spec, slice) = certified(seed, l as u64, |rng, attempt| {
            let spec = draw_spec(rng, r, true, seed);
            let slice = spectral_slice(&spec, n, s);
            let ratio = tail_ratio(&two_level_lift(&slice, shape).expect("slice dims"), r);
            if ratio > RANK_TOL {
                warn!("slice {l} attempt {attempt}: tail ratio {ratio:e} above {RANK_TOL:e}, regenerating");
                None
            } else {
                Some((spec, slice))
            }
        })?;
        slices.push(slice);
        specs.push(spec);
    }
    let xhat = Array3::from_slices(slices)?;
    let x = inverse_tube_dft(&xhat);
    let cast = |a: &Array3<f64>| Array3::from_slices(a.slices().iter().map(convert_matrix).collect());
    Ok(SpectralArray {
        x: cast(&x)?,
        xhat: cast(&xhat)?,
        specs,
    })
}
