//! Collective dephasing of qubit registers coupled to a common bosonic
//! reservoir.
//!
//! The central quantity is the decoherence function `Gamma_d(t)` of a pair of
//! computational basis states whose difference vector is `d`. It factors into
//! a register-dependent susceptibility and reservoir properties (spectral
//! density and mode occupation), which is what lets the crate compare how
//! different entangled states scale with register size.

pub mod decoherence;
pub mod error;
pub mod fidelity;
pub mod gaussian;
pub mod quadrature;
pub mod register;
pub mod reservoir;
pub mod scaling;
pub mod special;
pub mod susceptibility;

pub use error::{Error, Result};

/// Library version, recorded alongside generated data.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
