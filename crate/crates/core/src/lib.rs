//! Simulation and analysis toolkit for cavity-assisted optical readout of an
//! atomic qubit.
//!
//! The crate is organised by the question each module answers:
//!
//! - [`bounds`]: closed-form discrimination limits. Helstrom error, the
//!   knowledge function `fln`, channel-overlap exponents and ideal-cavity
//!   relations.
//! - [`detection`]: photon-counting discrimination. Chernoff exponent, exact
//!   minimal counting error, maximum-likelihood classification and seeded
//!   Monte Carlo of detection records with quantum jumps.
//! - [`zeno`]: measurement back action seen through a driven qubit under
//!   randomly timed projective measurements.
//! - [`scattering`]: spontaneous-scattering budget from depumping data.
//! - [`lindblad`]: a dense master-equation solver and the atom-cavity model
//!   builders used to check the microscopic numbers.
//!
//! Knowledge is always in nats. Rates entering [`bounds::CavityParams`] are in
//! units of 2π·MHz with half-width (field/dipole) conventions, so that
//! `C = g²/(2κγ)`.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bounds;
pub mod detection;
mod error;
pub mod lindblad;
pub mod rng;
pub mod scattering;
pub mod zeno;

pub use error::{Error, Result};

/// Computational-basis label of the qubit.
///
/// `Dark` is the state that does not interact with the probe (`|0⟩`), `Bright`
/// is the cavity-resonant state (`|1⟩`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum QubitState {
    Dark,
    Bright,
}

impl QubitState {
    pub fn index(self) -> usize {
        match self {
            QubitState::Dark => 0,
            QubitState::Bright => 1,
        }
    }

    pub fn flipped(self) -> Self {
        match self {
            QubitState::Dark => QubitState::Bright,
            QubitState::Bright => QubitState::Dark,
        }
    }
}
