//! Random quantum channels and the machines that try to purify them.
//!
//! Channels are held as unnormalized Choi operators (`tr C = d_I`) on
//! `H_I ⊗ H_O`; purifications are Choi vectors on `H_I ⊗ H_O ⊗ H_E`. All
//! tensor indices are row-major in that order.

pub mod channels;
pub mod ensembles;
pub mod error;
pub mod fixtures;
pub mod index;
pub mod linalg;
pub mod metrics;
pub mod strategies;
pub mod theory;

pub use error::{Error, Result};
