//! Exact and perturbative spectra of the quantum discrete nonlinear
//! Schrödinger (Bose-Hubbard) chain with periodic boundaries.
//!
//! The crate is organized bottom-up:
//!
//! * [`fock`]: occupation states, translation orbits, Bloch bases.
//! * [`hamiltonian`]: model parameters, momentum blocks, dense full-sector oracle.
//! * [`eigen`]: Hermitian eigensolver with a checked residual contract.
//! * [`perturbation`]: second-order effective matrices for two-clump bands.
//! * [`bands`]: band extraction, line/continuum tagging, effective masses.
//! * [`cli`]: run configuration, commands and CSV/JSON output.

pub mod error;
pub mod fock;
pub mod eigen;
pub mod hamiltonian;
pub mod perturbation;
pub mod bands;
pub mod cli;

pub use error::{Error, Result};
