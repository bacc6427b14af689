//! Orbit-method toolkit for the (1+1) Newton-Hooke algebra.
//!
//! * [`algebra`]: structure constants, validation, adjoint matrices.
//! * [`realization`]: phase-space polynomials and structure-constant extraction.
//! * [`coadjoint`]: the coadjoint action, closed form and by matrix exponentials.
//! * [`invariants`]: structure matrices, symplectic rank and Casimir fitting.
//! * [`orbit`]: the orbit chart, reduced Hamiltonian and integrators.
//! * [`damped`]: the canonical map from the damped to the undamped oscillator.
//! * [`cli`]: the `orbitkit` command line.

pub mod algebra;
pub mod cli;
pub mod coadjoint;
pub mod csv;
pub mod damped;
pub mod invariants;
pub mod orbit;
pub mod realization;

pub use algebra::{nh_algebra, LieAlgebra};
pub use coadjoint::{DualVector, GroupCoords};
pub use orbit::Method;
