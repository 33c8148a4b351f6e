//! Simulation and analysis of measurement reversal ("uncollapsing") on a
//! single qubit with a tunable-strength partial measurement.
//!
//! * [`qubit`]: states, Bloch vectors, fidelities, device constants.
//! * [`channels`]: partial measurement, rotations, T1/Tφ decoherence.
//! * [`protocol`]: partial-collapse and uncollapsing sequences, exact engine.
//! * [`tomography`]: three-setting state tomography with background subtraction.
//! * [`qpt`]: χ-matrix process tomography and uncollapsing fidelity.
//! * [`montecarlo`]: shot-based sampling with deterministic seeding.

pub mod channels;
pub mod error;
pub mod montecarlo;
pub mod protocol;
pub mod qpt;
pub mod qubit;
pub mod tomography;

pub use error::{Error, Result};
