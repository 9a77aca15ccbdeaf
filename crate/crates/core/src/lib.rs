// SPDX-License-Identifier: Apache-2.0

//! Frequency-modulated decoupling pulses for a qubit in a dephasing bath.
//!
//! The crate designs constant-amplitude, phase-modulated control pulses
//! whose correction propagator `U_c` equals the identity up to first or
//! second order in the pulse duration, and checks them against a brute-force
//! qubit-plus-bath simulation.
//!
//! * [`pulse`]: pulse shape, control field and pulse files.
//! * [`kinematics`]: global rotation `(ψ, â)` generated by the pulse.
//! * [`conditions`]: scalar decoupling integrals and boundary residuals.
//! * [`solver`]: root finding for pulse coefficients, amplitude minimization.
//! * [`verifier`]: explicit spin-bath evolution and decoupling-order fits.
//! * [`cli`]: the `fmpulse` command-line front end.

pub mod cli;
pub mod conditions;
pub mod error;
pub mod format;
pub mod kinematics;
pub mod pulse;
pub mod solver;
pub mod tables;
pub mod verifier;

pub use error::{Error, Result};
pub use pulse::PulseSpec;
