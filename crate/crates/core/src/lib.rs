//! Numerical core for multimodal similarity learning.
//!
//! The crate is `no_std` (it needs `alloc`) and holds every algorithm of the
//! toolkit: evaluation metrics, per-modality distances, diagonal Gaussian
//! mixtures trained by EM, GMM Fisher vectors, the similarity kernel built
//! from standardized per-sample distances, kernel learners, information
//! theoretic co-clustering, and a synthetic session-record generator.
//!
//! IO, persistence, parallel drivers and the command line live in the
//! `simkern` companion crate.
//!
//! All functions are pure over their inputs; anything random takes an
//! explicit `u64` seed and is reproducible bit for bit.

#![no_std]
#![forbid(unsafe_code)]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod bicluster;
pub mod distance;
pub mod error;
pub mod fisher;
pub mod gmm;
pub mod learn;
pub mod math;
pub mod matrix;
pub mod metrics;
pub mod selection;
pub mod session;
pub mod simkernel;

pub use error::{Error, Result};
pub use matrix::Matrix;
