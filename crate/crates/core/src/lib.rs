//! Phase-error and asymptotic key-rate bounds for loss-tolerant QKD whose
//! source has state-preparation flaws, side channels, and pulse-to-pulse
//! correlations of arbitrary range.
//!
//! The pipeline for one operating point:
//!
//! 1. [`states`]: reduce the correlation model to an effective single-pulse
//!    side channel and build actual and reference states.
//! 2. [`coeffs`]: Bloch coefficients of the reference qubit.
//! 3. [`channel`]: honest lossy channel producing observed yields.
//! 4. [`rt`]: tomography of Pauli transmission rates with a deviation term,
//!    giving an upper bound on the phase error rate.
//! 5. [`keyrate`]: asymptotic key rate; [`concentration`] supplies the
//!    finite-size replacement for step 4.

// `!(x > 0.0)` is used on purpose so NaN is rejected too
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod channel;
pub mod cli;
pub mod coeffs;
pub mod concentration;
pub mod error;
pub mod keyrate;
pub mod rt;
pub mod states;

pub use error::{Error, Result};
