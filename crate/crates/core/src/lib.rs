//! Hartley spectral pooling.
//!
//! The crate is organised bottom-up:
//!
//! * [`transform`]: unitary discrete Hartley transform (1D/2D), a direct-summation
//!   oracle, a reference 2D DFT and DC-centering shifts.
//! * [`pooling`]: Hartley and Fourier spectral pooling plus max/average pooling,
//!   each with an exact backward pass.
//! * [`nn`]: a small double-precision CNN stack (conv, batchnorm, ReLU, fc,
//!   softmax cross-entropy, Adam) used to train the toy MNIST network.
//! * [`data`]: IDX readers and seeded subset selection.
//! * [`bench`]: runtime comparison of the two spectral pooling flavours.
//! * [`gradcheck`]: the finite-difference suite behind `hsp gradcheck`.
//!
//! Batch-level loops run on rayon when the `parallel` feature is enabled (the
//! default). Every parallel loop writes disjoint output chunks with a fixed
//! per-chunk summation order, so results are bit-identical to
//! [`Execution::Sequential`].

pub mod bench;
pub mod data;
mod error;
mod exec;
mod gemm;
pub mod gradcheck;
mod matrix;
pub mod nn;
pub mod pgm;
pub mod pooling;
pub mod transform;

pub use error::{Error, Result};
pub use exec::Execution;
pub use matrix::{ComplexMatrix, Matrix, RealMatrix};
