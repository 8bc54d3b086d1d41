//! Completion of matrices and 3D arrays from partially observed entries by
//! minimizing the sum of nuclear norms of Hankel lifts of their
//! Fourier-transformed rows, plus numerical checks of the associated
//! recovery theory: incoherence, dual certificates and phase transitions.
//!
//! Every numerical routine is generic over [`Real`] (`f32` or `f64`); the
//! `*64` aliases below fix the common double-precision instantiation.

pub mod certificate;
pub mod error;
pub mod experiment;
pub mod fourier;
pub mod geometry;
pub mod hankel;
pub mod io;
pub mod sampling;
pub mod scalar;
pub mod signals;
pub mod solver;

pub use error::{Error, Result};
pub use fourier::{Array3, BlockDiagonal, FourierLift};
pub use hankel::{HankelShape, TwoLevelShape, WeightVector};
pub use sampling::{GolfingPartition, SamplingMask};
pub use solver::{SolveResult, SolverConfig};
pub use scalar::{CMatrix, CVector, Real};

pub use nalgebra::Complex;

pub type Complex64 = Complex<f64>;
pub type ComplexMatrix64 = CMatrix<f64>;
pub type ComplexMatrix32 = CMatrix<f32>;
pub type BlockDiagonal64 = BlockDiagonal<f64>;
pub type BlockDiagonal32 = BlockDiagonal<f32>;
pub type Array3F64 = Array3<f64>;
