//! Numerical laboratory for formal slow manifolds and adiabatic invariants of
//! fast-slow Hamiltonian systems with a U(1) fast symmetry.

pub mod adiabatic;
pub mod error;
pub mod fields3d;
pub mod harness;
pub mod integrate;
pub mod numcore;
pub mod slow;
pub mod spacetime;
pub mod sympl;
pub mod systems;

pub use error::{Error, Result};
