//! Double-precision matrix multiplication emulated on low-precision matrix
//! units via the Ozaki splitting scheme.
//!
//! The crate decomposes FP64 operands into exact low-precision slices
//! (8-bit integer slices with 32-bit accumulation, or FP32-exact floating
//! slices), multiplies the slices on emulated matrix units without rounding,
//! and reassembles the product in FP64. A double-double reference GEMM
//! serves as ground truth for every error measurement, an analytic planner
//! explores the matrix-unit design space, and a brickwork random-unitary
//! state-vector simulator drives the whole stack through its complex GEMM
//! backend.
//!
//! ```
//! use ozimm::datagen::{gen_phi_matrix, RngSeed};
//! use ozimm::dd::{dd_gemm, relative_error_stats};
//! use ozimm::ozgemm::{oz_dgemm, OzConfig};
//!
//! let a = gen_phi_matrix(64, 64, 0.1, RngSeed::new(1, 0));
//! let b = gen_phi_matrix(64, 64, 0.1, RngSeed::new(1, 1));
//!
//! // emulate the FP64 product on an INT8-input / INT32-accumulator unit
//! let (c, report) = oz_dgemm(&a, &b, &OzConfig::int8_fixed(9)).unwrap();
//! assert_eq!(report.gemm_calls, 45); // 9 * 10 / 2 slice products
//!
//! // narrow exponent spread: the emulated product beats plain FP64
//! let reference = dd_gemm(&a, &b).unwrap();
//! let stats = relative_error_stats(&c, &reference).unwrap();
//! assert!(stats.mean < 1e-15);
//! ```

pub mod bits;
pub mod datagen;
pub mod dd;
pub mod error;
pub mod kernel;
pub mod matio;
pub mod matrix;
pub mod mmu;
pub mod ozgemm;
pub mod qcsim;
pub mod split;

pub use error::{Error, Result};
pub use matrix::{CpxMatrix, Fp64Matrix};
pub use mmu::MmuSpec;
