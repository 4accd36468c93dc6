//! PackSELL: a sparse matrix format that packs a delta-encoded column index
//! and a reduced-precision value into a single 32- or 64-bit word, laid out
//! over SELL-C-σ slices.
//!
//! The crate provides the baseline CSR and SELL-C-σ formats, the PackSELL
//! builder and SpMV kernel, the word codecs (FP16 embedding, E8MY, and a
//! lossless FP32 embedding), evaluation metrics, and a family of CG solvers
//! (PCG, flexible CG, inner-outer CG) that can run their inner loop on any
//! of the formats.

pub mod cli;
pub mod codec;
pub mod container;
pub mod error;
pub mod kernel;
pub mod matrix;
pub mod metrics;
pub mod mtx;
pub mod packsell;
pub mod scalar;
pub mod sell;
pub mod solvers;
pub mod stencil;

pub use codec::{Codec, PackFormat, UnpackedEntry};
pub use error::{Error, Result};
pub use kernel::SpmvKernel;
pub use matrix::{CooMatrix, CsrMatrix, MatrixStats};
pub use packsell::{PackSellMatrix, Footprint};
pub use scalar::Scalar;
pub use sell::{PermMode, SellMatrix};
pub use solvers::{SolveConfig, SolveReport};
pub use metrics::SpmvReport;
