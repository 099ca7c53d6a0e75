//! Photon echo simulator for a three-level Λ ensemble driven by a double
//! rephasing sequence with an optical locking pulse pair.
//!
//! The crate is split along the data flow:
//!
//! * [`ensemble`] discretizes the inhomogeneous line and reduces per-group
//!   results into the macroscopic coherence `P(t)`.
//! * [`sequence`] holds the control pulses, their validation, and the
//!   line-oriented configuration format.
//! * [`dynamics`] integrates each group's 3×3 density matrix.
//! * [`analysis`] detects and classifies echoes and provides the analytic
//!   predictors used to cross-check the dynamics.
//! * [`cli`] implements the command-line surface and CSV output.
//!
//! Unit conventions: times in μs, configured frequencies and rates in kHz
//! (ordinary frequency). The only conversion to angular units happens in
//! [`dynamics`].

// Validation is written as `!(x > 0.0)` so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod cli;
pub mod dynamics;
pub mod ensemble;
mod error;
pub mod sequence;

pub use error::{Error, Result};
