//! Compressed-sensing reconstruction of variable-density Fourier-sampled
//! images with approximate message passing (VDAMP) and FISTA baselines.

// argument checks are written as negated comparisons so NaN is rejected
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod denoise;
pub mod diagnostics;
pub mod error;
pub mod io;
pub mod phantom;
pub mod rng;
pub mod sampling;
pub mod solvers;
pub mod spectrum;
pub mod transforms;

pub use error::{Error, Result};
pub use transforms::{ComplexImage, SubbandLayout, SubbandVector, WaveletCoeffs};
