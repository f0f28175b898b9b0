//! Dense tensor algebra with randomized low-rank approximation.
//!
//! The crate provides the building blocks for Tucker-format compression of
//! dense tensors by sketching:
//!
//! * [`tensor`]: dense tensors, mode-k unfolding/folding and mode products;
//! * [`matrix`]: a small column-major matrix type backed by BLAS-style GEMM;
//! * [`linalg`]: Householder QR, Jacobi SVD, truncated pseudoinverses and
//!   triangular solves;
//! * [`sketch`]: seeded random sketch generation (Gaussian, subsampled
//!   Hadamard, subsampled Kronecker, Khatri-Rao) including structured
//!   application against Tucker factors;
//! * [`nystrom`]: matrix rangefinder and generalized Nystrom approximation,
//!   plain and stabilized;
//! * [`mln`]: the multilinear Nystrom Tucker approximation, its stabilized
//!   variant, a single-sketch variant, and Tucker-to-Tucker recompression;
//! * [`baselines`]: HOSVD and two randomized HOSVD variants for comparison;
//! * [`diagnostics`]: runtime evaluation of the deterministic accuracy bound
//!   and per-mode error decompositions.
//!
//! Everything is generic over the scalar type through [`scalar::Real`], which
//! is implemented for `f32` and `f64`. The aliases below fix the scalar for
//! the common case.

pub mod baselines;
pub mod diagnostics;
pub mod error;
pub mod linalg;
pub mod matrix;
pub mod mln;
pub mod nystrom;
pub mod scalar;
pub mod sketch;
pub mod tensor;

pub use error::{Error, Result};
pub use scalar::Real;

/// Double precision dense tensor.
pub type Tensor64 = tensor::DenseTensor<f64>;
/// Single precision dense tensor.
pub type Tensor32 = tensor::DenseTensor<f32>;
/// Double precision matrix.
pub type Matrix64 = matrix::Matrix<f64>;
/// Single precision matrix.
pub type Matrix32 = matrix::Matrix<f32>;
/// Double precision Tucker-format tensor.
pub type Tucker64 = mln::TuckerTensor<f64>;
/// Single precision Tucker-format tensor.
pub type Tucker32 = mln::TuckerTensor<f32>;
