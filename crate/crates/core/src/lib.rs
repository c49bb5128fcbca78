//! Radial local-phonon hopping between two trapped ions: trap-derived
//! quantities, the Kerr dephasing model of the hopping signal, brute-force
//! oracles for it, and damped-sine fitting of measured or simulated traces.

pub mod error;
pub mod harness;
pub mod kerr_model;
pub mod quantum_oracle;
pub mod signal_analysis;
pub mod trap_physics;

pub use error::{Error, Result};
