//! Brute-force validators for the analytic model.
//!
//! Each routine reaches the same quantity as a closed-form expression
//! elsewhere in the crate by a different route: exact unitary evolution of
//! a single phonon on two sites, stochastic sampling of the thermal
//! occupation, and a numerical normal-mode analysis of the ion crystal.

mod monte_carlo;
mod normal_modes;
mod unitary;

pub use monte_carlo::{monte_carlo_signal, sample_occupation};
pub use normal_modes::{classical_normal_modes, jacobi_eigenvalues, potential_energy, potential_hessian, IonCrystal, HESSIAN_STEP};
pub use unitary::{evolve_single_phonon, evolve_state, Hermitian2, SinglePhononState};
