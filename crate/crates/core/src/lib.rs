//! Desk-scale pipeline for machine-learned quantum state fidelity estimation.
//!
//! The crate covers the full loop: generate labeled quantum states at a
//! specified fidelity to a pure target, simulate local Pauli measurements
//! with Poisson shot noise, train a softmax bin classifier on the outcomes,
//! calibrate (epsilon, 1 - delta) error bars from held-out data, and run an
//! adaptive threshold certification that adds one measurement setting per
//! round. Direct fidelity estimation and tomography setting counts are
//! provided as baselines.
//!
//! All randomness flows through [`stategen::RngStream`] (ChaCha8, root seed
//! plus stream index), so every artifact is reproducible from its manifest.

pub mod dataset;
pub mod error;
pub mod estimator;
pub mod quantum;
pub mod measurement;
pub mod nn;
pub mod pipeline;
pub mod stategen;
pub mod reference;
pub mod select;

pub use error::{Error, Result};
