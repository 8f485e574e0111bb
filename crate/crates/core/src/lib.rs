//! Simulation and estimation core for measuring the residual excited-state
//! population of a qubit from correlations between sequential QND readouts.
//!
//! The crate is `no_std` (with `alloc`). Everything here is a pure function of
//! its inputs; randomness comes from counter-keyed ChaCha substreams so a
//! dataset is a function of `(config, seed)` alone, whatever the execution
//! order. The `qtherm` crate adds parallel generation, file formats, the
//! experiment harness and the command line.

#![no_std]
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod error;
pub mod estimate;
pub mod fit;
pub mod model;
pub mod rng;
pub mod sim;
pub mod stats;

pub use error::{Error, Result};
pub use num_complex::Complex64;
