//! Domain-aware quantum circuits for image classification, simulated exactly on
//! dense statevectors.
//!
//! The crate is organized bottom-up:
//!
//! - [`statevector`]: amplitudes, gate kernels, expectations and partial traces.
//! - [`circuit`]: image encoding and the interleaved encode/entangle/train ansatz.
//! - [`training`]: linear readout, cross-entropy, gradients, AdamW and metrics.
//! - [`diagnostics`]: expressibility, entangling capability and gradient-variance
//!   sweeps.
//! - [`dataset`]: IDX ingestion, class subsets and stratified splits.

pub mod circuit;
pub mod dataset;
pub mod diagnostics;
pub mod error;
pub mod statevector;
pub mod training;

pub use error::{DaqcError, Result};
