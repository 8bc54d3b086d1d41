//! Bernoulli observation masks, golfing partitions and the sampling
//! projection `P_Ω`.

use nalgebra::Complex;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fourier::Array3;
use crate::scalar::{c_zero, CMatrix, Real};

/// SplitMix64 finalizer, used to derive independent stream ids from index
/// tuples.
pub fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Hashes an index path into a single stream id.
pub fn stream_id(parts: &[u64]) -> u64 {
    parts.iter().fold(0x5851_F42D_4C95_7F2D, |acc, &p| mix64(acc ^ mix64(p)))
}

/// Seeded ChaCha8 generator on the stream selected by `stream`.
pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Set of observed positions over a 2D `(d, n)` or 3D `(n, s, d)` grid,
/// stored densely in row-major order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SamplingMask {
    dims: Vec<usize>,
    observed: Vec<bool>,
    p: f64,
    seed: u64,
}

fn check_p(p: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&p) || p.is_nan() {
        return Err(Error::InvalidArgument(format!("sampling probability {p} outside [0, 1]")));
    }
    Ok(())
}

fn check_dims(dims: &[usize]) -> Result<()> {
    if !(dims.len() == 2 || dims.len() == 3) || dims.contains(&0) {
        return Err(Error::InvalidArgument(format!(
            "mask dims must be 2 or 3 positive extents, got {dims:?}"
        )));
    }
    Ok(())
}

impl SamplingMask {
    /// Builds a mask from explicit 0-based index tuples.
    pub fn from_indices(dims: &[usize], indices: &[Vec<usize>], p: f64, seed: u64) -> Result<Self> {
        check_dims(dims)?;
        check_p(p)?;
        let mut mask = Self {
            dims: dims.to_vec(),
            observed: vec![false; dims.iter().product()],
            p,
            seed,
        };
        for idx in indices {
            let flat = mask.flat_index(idx)?;
            if mask.observed[flat] {
                return Err(Error::InvalidArgument(format!("duplicate mask index {idx:?}")));
            }
            mask.observed[flat] = true;
        }
        Ok(mask)
    }

    /// Mask observing every position.
    pub fn full(dims: &[usize]) -> Result<Self> {
        check_dims(dims)?;
        Ok(Self {
            dims: dims.to_vec(),
            observed: vec![true; dims.iter().product()],
            p: 1.0,
            seed: 0,
        })
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn len(&self) -> usize {
        self.observed.len()
    }

    pub fn is_empty(&self) -> bool {
        self.observed.is_empty()
    }

    pub fn count(&self) -> usize {
        self.observed.iter().filter(|&&b| b).count()
    }

    pub fn is_full(&self) -> bool {
        self.observed.iter().all(|&b| b)
    }

    /// Row-major flags, one per position.
    pub fn flags(&self) -> &[bool] {
        &self.observed
    }

    pub fn flat_index(&self, idx: &[usize]) -> Result<usize> {
        if idx.len() != self.dims.len() || idx.iter().zip(&self.dims).any(|(i, d)| i >= d) {
            return Err(Error::InvalidArgument(format!(
                "index {idx:?} out of range for dims {:?}",
                self.dims
            )));
        }
        Ok(idx.iter().zip(&self.dims).fold(0, |acc, (i, d)| acc * d + i))
    }

    pub fn contains(&self, idx: &[usize]) -> bool {
        self.flat_index(idx).map(|f| self.observed[f]).unwrap_or(false)
    }

    /// 2D lookup `(row, col)`.
    pub fn at(&self, i: usize, k: usize) -> bool {
        self.observed[i * self.dims[1] + k]
    }

    /// Observed positions as 0-based tuples in row-major order.
    pub fn indices(&self) -> Vec<Vec<usize>> {
        self.observed
            .iter()
            .enumerate()
            .filter(|(_, &b)| b)
            .map(|(flat, _)| {
                let mut idx = vec![0; self.dims.len()];
                let mut rem = flat;
                for (slot, d) in idx.iter_mut().zip(&self.dims).rev() {
                    *slot = rem % d;
                    rem /= d;
                }
                idx
            })
            .collect()
    }

    /// Union of masks over the same dims; `p` is taken from `self`.
    pub fn union(&self, other: &Self) -> Result<Self> {
        if self.dims != other.dims {
            return Err(Error::dim("SamplingMask::union", format!("{:?}", self.dims), format!("{:?}", other.dims)));
        }
        Ok(Self {
            observed: self.observed.iter().zip(&other.observed).map(|(a, b)| *a || *b).collect(),
            ..self.clone()
        })
    }

    /// Same mask with a different nominal probability attached.
    pub fn with_p(mut self, p: f64) -> Result<Self> {
        check_p(p)?;
        self.p = p;
        Ok(self)
    }

    /// Observation flags arranged as a `d × m` grid where row `l` collects
    /// the positions of tube index `l` (row-major over the remaining axes).
    /// For 2D masks this is the mask itself.
    pub(crate) fn tube_rows(&self) -> Vec<Vec<bool>> {
        match *self.dims.as_slice() {
            [d, n] => (0..d).map(|i| self.observed[i * n..(i + 1) * n].to_vec()).collect(),
            [n, s, d] => (0..d)
                .map(|l| (0..n * s).map(|js| self.observed[js * d + l]).collect())
                .collect(),
            _ => unreachable!("dims validated at construction"),
        }
    }
}

fn draw_mask(dims: &[usize], p: f64, seed: u64, stream: u64) -> SamplingMask {
    let mut rng = stream_rng(seed, stream);
    let len = dims.iter().product();
    let observed = (0..len)
        .map(|_| if p >= 1.0 { true } else { rng.gen::<f64>() < p })
        .collect();
    SamplingMask {
        dims: dims.to_vec(),
        observed,
        p,
        seed,
    }
}

/// Includes each position independently with probability `p`.
pub fn bernoulli_mask(dims: &[usize], p: f64, seed: u64) -> Result<SamplingMask> {
    check_dims(dims)?;
    check_p(p)?;
    Ok(draw_mask(dims, p, seed, 0))
}

/// Base of the logarithm in `k0 = ⌈2·log(d·n)⌉`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LogBase {
    #[default]
    Natural,
    Two,
    Ten,
}

impl LogBase {
    pub fn log(self, x: f64) -> f64 {
        match self {
            LogBase::Natural => x.ln(),
            LogBase::Two => x.log2(),
            LogBase::Ten => x.log10(),
        }
    }
}

/// Independent masks `Ω_1 … Ω_k0`, each Bernoulli(`q`) with
/// `q = 1 − (1 − p)^{1/k0}`, whose union is distributed Bernoulli(`p`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GolfingPartition {
    pub k0: usize,
    pub q: f64,
    pub p: f64,
    pub masks: Vec<SamplingMask>,
}

impl GolfingPartition {
    /// `Ω = ∪_k Ω_k`, tagged with the nominal `p`.
    pub fn union(&self) -> SamplingMask {
        let mut acc = self.masks[0].clone();
        for m in &self.masks[1..] {
            acc = acc.union(m).expect("partition masks share dims");
        }
        acc.p = self.p;
        acc
    }

    /// Every mask full with `q = 1`.
    pub fn full(dims: &[usize], k0: usize) -> Result<Self> {
        if k0 == 0 {
            return Err(Error::InvalidArgument("k0 must be positive".into()));
        }
        let mask = SamplingMask::full(dims)?;
        Ok(Self {
            k0,
            q: 1.0,
            p: 1.0,
            masks: vec![mask; k0],
        })
    }
}

/// `k0 = ⌈2·log(d·n)⌉`, at least 1.
pub fn golfing_k0(total: usize, base: LogBase) -> usize {
    ((2.0 * base.log(total as f64)).ceil() as usize).max(1)
}

/// Golfing partition with the natural-log `k0`.
pub fn golfing_partition(dims: &[usize], p: f64, seed: u64) -> Result<GolfingPartition> {
    golfing_partition_with(dims, p, seed, LogBase::Natural)
}

pub fn golfing_partition_with(dims: &[usize], p: f64, seed: u64, base: LogBase) -> Result<GolfingPartition> {
    check_dims(dims)?;
    check_p(p)?;
    if p <= 0.0 {
        return Err(Error::InvalidArgument("golfing partition needs p > 0".into()));
    }
    let k0 = golfing_k0(dims.iter().product(), base);
    let q = if p >= 1.0 { 1.0 } else { 1.0 - (1.0 - p).powf(1.0 / k0 as f64) };
    let masks = (0..k0)
        .map(|k| {
            let mut m = draw_mask(dims, q, seed, stream_id(&[k as u64 + 1]));
            m.p = q;
            m
        })
        .collect();
    Ok(GolfingPartition { k0, q, p, masks })
}

/// Types that `P_Ω` acts on.
pub trait Project: Sized {
    /// Keeps observed entries and zeroes the rest.
    fn project(&self, mask: &SamplingMask) -> Result<Self>;
}

impl<T: Real> Project for CMatrix<T> {
    fn project(&self, mask: &SamplingMask) -> Result<Self> {
        if mask.dims() != [self.nrows(), self.ncols()] {
            return Err(Error::dim(
                "project",
                format!("{}x{}", self.nrows(), self.ncols()),
                format!("{:?}", mask.dims()),
            ));
        }
        Ok(CMatrix::from_fn(self.nrows(), self.ncols(), |i, k| {
            if mask.at(i, k) {
                self[(i, k)]
            } else {
                c_zero()
            }
        }))
    }
}

impl<T: Real> Project for Array3<T> {
    fn project(&self, mask: &SamplingMask) -> Result<Self> {
        let (n, s, d) = self.dims();
        if mask.dims() != [n, s, d] {
            return Err(Error::dim("project", format!("{n}x{s}x{d}"), format!("{:?}", mask.dims())));
        }
        let mut out = self.clone();
        for j in 0..n {
            for k in 0..s {
                for l in 0..d {
                    if !mask.observed[(j * s + k) * d + l] {
                        out.set(j, k, l, Complex::new(T::zero(), T::zero()));
                    }
                }
            }
        }
        Ok(out)
    }
}

/// `P_Ω(X)` for a matrix or 3D array.
pub fn project<X: Project>(x: &X, mask: &SamplingMask) -> Result<X> {
    x.project(mask)
}
