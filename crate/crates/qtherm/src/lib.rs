//! Host-side tooling for correlation-based qubit thermometry: parallel
//! simulation, record and config formats, composed experiments and the
//! `qtherm` command line.

pub mod cli;
pub mod config;
pub mod dataset;
pub mod error;
pub mod estimation;
pub mod harness;
pub mod manifest;
pub mod records;

pub use error::{Error, Result};
pub use qtherm_core;
