//! Creation of the two-branch entangled state (|00…0⟩ + |11…1⟩)/√2 in
//! chains of dipole-coupled spin-½ qubits placed in a field gradient and
//! driven by rectangular RF pulses.
//!
//! The crate is organized bottom-up:
//!
//! - [`model`]: basis encoding, energies, couplings and the observables `P`
//!   (error probability) and `M` (dimensionless z magnetization).
//! - [`protocol`]: synthesis of the Hadamard + Control-Not pulse sequence with
//!   long-range compensated frequencies and 2πK Rabi frequencies.
//! - [`dynamics`]: exact rotating-frame propagation, the two-level analytic
//!   propagator and an independent time-stepping oracle.
//! - [`estimators`]: closed-form error and magnetization predictions.
//! - [`ensemble`]: seeded Monte Carlo over displaced qubits and field
//!   fluctuations.
//! - [`fitting`]: linear-in-L and power-law-in-α regressions.
//!
//! All frequencies are angular, in rad/μs; times are in μs. Use
//! [`model::mhz`] to convert ordinary frequencies quoted in MHz.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod dynamics;
pub mod ensemble;
pub mod error;
pub mod estimators;
pub mod fitting;
pub mod model;
pub mod protocol;

pub use error::{Error, Result};
