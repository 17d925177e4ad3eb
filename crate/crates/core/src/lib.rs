//! Reconstruction from nonlinear measurements with certified constants.
//!
//! The crate is organised bottom-up:
//!
//! * [`spaces`] vectors, norms, dense operators, unions of subspaces
//! * [`maps`] differentiable maps and a catalog of instances
//! * [`certify`] sampled and exact stability constants with verdicts
//! * [`solvers`] left-inverse, Van Cittert and localized fixed-point iterations
//! * [`sparse`] sparse approximation triples, greedy approximation, constrained recovery
//! * [`cli`] experiment configs, orchestration and report emission
//!
//! See the `examples/` directory for one runnable program per capability.

pub mod certify;
pub mod cli;
pub mod error;
pub mod report;
pub mod rng;
pub mod maps;
pub mod solvers;
pub mod spaces;
pub mod sparse;

pub use error::{Error, Result};
pub use report::{Provenance, Quantity, Verdict};
