//! Tensor-train quantum state tomography at desk scale.
//!
//! The crate simulates finite-shot measurements of matrix-product states and
//! operators under Haar random rank-one POVMs and Gaussian ensembles, recovers
//! states by iterative hard thresholding with sequential-SVD projection, and
//! numerically verifies the embedding and moment identities the pipeline
//! relies on.
//!
//! Everything stochastic is keyed by explicit `u64` seeds; Monte Carlo trials
//! parallelize over sub-seeded streams (feature `parallel`, on by default)
//! with bit-identical results in sequential mode.

pub mod diagnostics;
pub mod error;
pub mod exec;
pub mod field;
pub mod linalg;
pub mod measurement;
pub mod recovery;
pub mod rng;
pub mod tt;

pub use error::{Error, Result};
pub use field::{Field, Scalar};
pub use num_complex::Complex64;
