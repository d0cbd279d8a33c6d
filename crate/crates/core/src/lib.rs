//! Hartree-Fock solvers on the manifold of density matrices.
//!
//! Three iterations are provided and compared: projected gradient descent
//! along geodesics `D ← exp(t[D,F]) D exp(−t[D,F])`, the Roothaan fixed-point
//! iteration `D ← aufbau(F(D))`, and Level-Shifting `D ← aufbau(F(D) − bD)`.
//! The [`analysis`] module turns their traces into convergence rates,
//! Łojasiewicz exponents and shift-scaling laws.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod error;
pub mod hamiltonian;
pub mod io;
pub mod manifold;
pub mod matops;
pub mod solvers;

pub use error::{Error, Result};
pub use hamiltonian::{ElectronicSystem, EriTensor, OccupationConvention};
pub use manifold::{DensityMatrix, TangentVector};
pub use matops::{AntiSymMatrix, OrthogonalMatrix, Spectrum, SymMatrix};
