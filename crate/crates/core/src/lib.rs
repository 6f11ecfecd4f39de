//! Dynamics of two two-level atoms coupled to a two-mode cavity through a
//! damped (non-Hermitian) Hamiltonian.
//!
//! The state space decomposes into four-dimensional Fock blocks. Each block is
//! evolved in closed form: the generator's eigenvalues come from the quartic
//! resolvent ([`quartic`]) and the propagator from a Newton divided-difference
//! expansion of the exponential ([`propagator`]). Blocks are then assembled
//! into a dense state ([`state`]) from which the entanglement and geometric
//! phase observables are computed ([`observables`]). The [`cli`] module drives
//! parameter sweeps and writes CSV.

pub mod cli;
pub mod error;
pub mod model;
pub mod observables;
pub mod propagator;
pub mod quartic;
pub mod state;

use num_complex::Complex64;

pub use error::{Error, Result};

pub type Matrix4c = nalgebra::Matrix4<Complex64>;
pub type Vector4c = nalgebra::Vector4<Complex64>;

/// The imaginary unit.
pub const I: Complex64 = Complex64::new(0.0, 1.0);
