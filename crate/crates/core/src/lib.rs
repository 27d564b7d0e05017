//! Quantum emitters coupled to a honeycomb bosonic bath with a Dirac-cone
//! dispersion.
//!
//! Two independent routes to the same dynamics are provided:
//!
//! * [`dynamics`]: exact propagation of the single-excitation wavefunction on
//!   a finite `N x N` lattice (bath stored in momentum space).
//! * [`resolvent`]: the continuum Green function built from the closed-form
//!   self-energy ([`selfenergy`]), continued onto the unphysical Riemann
//!   sheets, with poles, residues and branch-cut detour integrals.
//!
//! All energies are in units of the hopping `J` (so `J = 1` internally) and
//! times in units of `1/J`.

pub mod collective;
pub mod dynamics;
pub mod error;
pub mod lattice;
pub mod quad;
pub mod resolvent;
pub mod selfenergy;
pub mod specfun;
mod sum;

pub use error::{Error, Result};
pub use num_complex::Complex64 as C64;
