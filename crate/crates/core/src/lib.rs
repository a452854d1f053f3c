//! Sample covariance estimation for random positive semidefinite matrices.
//!
//! The crate bundles dense symmetric linear algebra, samplers for isotropic
//! matrix ensembles, projection-regularity diagnostics, barrier-potential
//! certificates for sums of random matrices, a deterministic spectral
//! sparsifier and an experiment harness with a command-line front end.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod barrier;
pub mod ensembles;
pub mod error;
pub mod experiments;
pub mod linalg;
pub mod regularity;
pub mod rng;
pub mod sparsifier;
mod table;

pub use error::{Error, Result};
pub use linalg::{Matrix, Projection, SpectralDecomp, SymMatrix};
pub use rng::RngStream;
